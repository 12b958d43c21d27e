#include "oracles.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace algebroid;
using namespace testsupport;

namespace {

double maxStructureResidual(const FibredAlgebroidPair& FA, std::uint64_t seed, int samples = 100) {
  const Algebroid A = FA.totalAlgebroid();
  std::mt19937_64 rng(seed);
  double worst = 0;
  for (int k = 0; k < samples; ++k)
    worst = std::max(worst, structureEquationResiduals(A, randomPoint(A.baseDim(), rng, 2.0)).maxAbs());
  return worst;
}

MechanicsState state(double t, const Vector& u, const Vector& y) { return {t, u, y, {}, {}}; }

Vector vec3(double a, double b, double c) { return (Vector(3) << a, b, c).finished(); }

}  // namespace

// ---------------------------------------------------------------- builders

TEST(Builders, StructureEquationsHoldForEveryScenario) {
  EXPECT_LT(maxStructureResidual(builderStandard(fourierConnection(2, 2, 101)), 1), 1e-8);
  EXPECT_LT(maxStructureResidual(builderTimeDependent(heavyTopData()), 2), 1e-8);
  const auto curvature = [](const Vector& x) {
    Array O({2, 2, 3});
    O(0, 1, 0) = std::sin(x(0));
    O(1, 0, 0) = -std::sin(x(0));
    return O;
  };
  EXPECT_LT(maxStructureResidual(builderAtiyah({2, Array({3, 3, 3}), curvature}), 3), 1e-8);
  // With [e_a, e_alpha] = 0 the Jacobi identity needs Omega in the centre of g.
  EXPECT_GT(maxStructureResidual(builderAtiyah({2, so3Constants<double>(), curvature}), 3), 0.1);
}

TEST(Builders, ConstantCoefficientCasesAreExact) {
  EXPECT_EQ(maxStructureResidual(builderTimeDependent(rigidBodyData()), 4), 0.0);
  EXPECT_EQ(maxStructureResidual(builderTimeDependent(freeParticleData(3)), 5), 0.0);
  EXPECT_EQ(maxStructureResidual(builderChernSimons({so3Constants<double>(), Matrix::Identity(3, 3)}).first, 6), 0.0);
  EXPECT_EQ(maxStructureResidual(builderAtiyah({3, so3Constants<double>(), {}}), 7), 0.0);
}

TEST(Builders, OppositeHeavyTopAnchorViolatesTheAnchorEquation) {
  TimeDependentData D = heavyTopData();
  const auto rho = D.rhoV;
  D.rhoV = [rho](double t, const Vector& u) { return Matrix(-rho(t, u)); };
  EXPECT_GT(maxStructureResidual(builderTimeDependent(D), 8), 0.1);
}

TEST(Builders, RejectDimensionMismatch) {
  StandardCaseData D = fourierConnection(2, 2, 9);
  D.r = 0;
  EXPECT_THROW(builderStandard(D), DimensionError);
  TimeDependentData T = rigidBodyData();
  T.mk = 2;
  EXPECT_THROW(builderTimeDependent(T), DimensionError);
  EXPECT_THROW(builderAtiyah({2, Array({2, 2}), {}}), DimensionError);
}

// ---------------------------------------------------------------- standard

TEST(StandardCase, TrivialConnectionMatchesClassicalEulerLagrange) {
  StandardCaseData D;
  D.r = 2;
  D.mu = 2;
  D.connection = [](const Vector&, const Vector&) { return Matrix::Zero(2, 2).eval(); };
  const FibredAlgebroidPair FA = builderStandard(D);
  const Matrix W = (Matrix(2, 2) << 1.0, 2.5, 0.7, 1.3).finished();
  Potential V;
  V.value = [](const Vector& u) { return 0.25 * u.array().pow(4).sum() + 0.5 * u.squaredNorm(); };
  V.gradient = [](const Vector& u) { return Vector(u.array().pow(3) + u.array()); };
  V.hessian = [](const Vector& u) { return Matrix((3 * u.array().square() + 1).matrix().asDiagonal()); };
  const Lagrangian L = quadraticLagrangian(W, 2, V);
  auto f = std::make_shared<FourierField>(2, 6, 102);
  const DiscretizedSection phi = DiscretizedSection::sample(GridSpec::periodicBox(2, 12), 2, 2, [&](const Vector& x) {
    const Vector v = (*f)(x);
    return std::pair{Vector(v.head(2)), Matrix(v.tail(4).reshaped(2, 2))};
  });
  for (std::size_t n = 0; n < phi.nodeCount(); ++n) {
    const Vector ours = elResidual(FA, L, phi, n);
    const Vector oracle = oracles::classicalEulerLagrange(phi, W, V.gradient, n);
    EXPECT_LT((ours - oracle).norm(), 1e-10 * std::max(1.0, oracle.norm()));
  }
}

TEST(StandardCase, FlatLinearConnectionAdmitsExactHolonomicFields) {
  // Gamma_i = K_i u with commuting K_i has zero curvature, and
  // u = exp(x^1 K_1 + x^2 K_2) u0 has y = du - Gamma = 0.
  const Matrix K1 = (Matrix(2, 2) << 0.3, 0.0, 0.0, -0.2).finished();
  const Matrix K2 = (Matrix(2, 2) << 0.5, 0.0, 0.0, 0.1).finished();
  StandardCaseData D;
  D.r = 2;
  D.mu = 2;
  D.connection = [=](const Vector&, const Vector& u) {
    Matrix G(2, 2);
    G.row(0) = (K1 * u).transpose();
    G.row(1) = (K2 * u).transpose();
    return G;
  };
  const FibredAlgebroidPair FA = builderStandard(D);
  GridSpec g;
  g.extents = {9, 9};
  g.spacing = {0.1, 0.1};
  g.boundary = Boundary::OneSided;
  const Vector u0 = (Vector(2) << 1.0, -0.5).finished();
  const DiscretizedSection phi = DiscretizedSection::sample(g, 2, 2, [&](const Vector& x) {
    const Vector u = (x(0) * K1 + x(1) * K2).diagonal().array().exp().matrix().cwiseProduct(u0);
    return std::pair{u, Matrix(Matrix::Zero(2, 2))};
  });
  EXPECT_LT(residualReport(FA, phi, 0.0).morphismMax, 1e-12);
}

// --------------------------------------------------------------- mechanics

TEST(Mechanics, FreeParticleIsExact) {
  const FibredAlgebroidPair FA = builderTimeDependent(freeParticleData(2));
  const Lagrangian L = quadraticLagrangian(Matrix::Ones(2, 1), 2);
  const Vector u0 = (Vector(2) << 0.5, -1.0).finished(), y0 = (Vector(2) << 2.0, 0.25).finished();
  const MechanicsTrajectory traj = integrateMechanics(FA, L, state(0.0, u0, y0), 3.0, 0.01);
  ASSERT_EQ(traj.states.size(), 301u);
  for (const auto& s : traj.states) {
    EXPECT_LT((s.u - (u0 + s.t * y0)).norm(), 1e-12);
    EXPECT_EQ(s.y, y0);
  }
  EXPECT_DOUBLE_EQ(traj.states.back().t, 3.0);
}

TEST(Mechanics, RigidBodyInvariantsDriftAtFourthOrder) {
  const FibredAlgebroidPair FA = builderTimeDependent(rigidBodyData());
  const Vector I = vec3(1, 2, 3);
  const Lagrangian L = quadraticLagrangian(I, 0);
  auto drift = [&](double dt) {
    return oracles::rigidBodyDrift(I, integrateMechanics(FA, L, state(0.0, Vector(0), vec3(1, 1, 1)), 4.0, dt));
  };
  const auto coarse = drift(4e-3), fine = drift(2e-3);
  EXPECT_LT(coarse.first, 1e-8);
  EXPECT_LT(coarse.second, 1e-8);
  EXPECT_GT(coarse.first / fine.first, 10.0);
  EXPECT_LT(coarse.first / fine.first, 24.0);
  EXPECT_GT(coarse.second / fine.second, 10.0);
  EXPECT_LT(coarse.second / fine.second, 24.0);
}

TEST(Mechanics, TrajectoryResidualIsFourthOrder) {
  const FibredAlgebroidPair FA = builderTimeDependent(rigidBodyData());
  const Lagrangian L = quadraticLagrangian(vec3(1, 2, 3), 0);
  auto worst = [&](double dt) {
    const MechanicsTrajectory traj = integrateMechanics(FA, L, state(0.0, Vector(0), vec3(1, 1, 1)), 2.0, dt);
    EXPECT_EQ(traj.elResidual.front(), 0.0);
    return *std::max_element(traj.elResidual.begin(), traj.elResidual.end());
  };
  const double ratio = worst(0.02) / worst(0.01);
  EXPECT_GT(ratio, 10.0);
  EXPECT_LT(ratio, 24.0);
}

TEST(Mechanics, HeavyTopConservesItsInvariants) {
  const FibredAlgebroidPair FA = builderTimeDependent(heavyTopData());
  const Vector I = vec3(1, 2, 3), c = vec3(0.1, -0.3, 0.7);
  const Lagrangian L = quadraticLagrangian(I, 3, Potential::linear(c));
  const MechanicsState s0 = state(0.0, vec3(0.0, 0.6, 0.8), vec3(0.5, -1.0, 0.3));
  const MechanicsTrajectory traj = integrateMechanics(FA, L, s0, 5.0, 1e-3);
  auto energy = [&](const MechanicsState& s) { return 0.5 * I.dot(s.y.cwiseAbs2()) + c.dot(s.u); };
  auto casimir = [&](const MechanicsState& s) { return s.u.dot(I.cwiseProduct(s.y)); };
  for (const auto& s : traj.states) {
    EXPECT_NEAR(s.u.squaredNorm(), 1.0, 1e-10);
    EXPECT_NEAR(energy(s), energy(s0), 1e-10);
    EXPECT_NEAR(casimir(s), casimir(s0), 1e-10);
    EXPECT_NEAR(mechanicsEnergy(L, s), energy(s), 1e-12);
  }
  // du/dt = u x y
  const Eigen::Vector3d u = s0.u, y = s0.y;
  EXPECT_LT((mechanicsRate(FA, L, s0).first - Vector(u.cross(y))).norm(), 1e-14);
}

TEST(Mechanics, DegenerateLagrangianIsRejected) {
  const FibredAlgebroidPair FA = builderTimeDependent(rigidBodyData());
  const Lagrangian L = quadraticLagrangian(vec3(1, 0, 2), 0);
  EXPECT_THROW(integrateMechanics(FA, L, state(0.0, Vector(0), vec3(1, 1, 1)), 1.0, 0.1), SingularHessian);
}

TEST(Mechanics, BlowUpIsReported) {
  // e_0 = d/dt + u^2 d/du, e_1 = d/du, [e_0, e_1] = -2u e_1; y = 0 gives du/dt = u^2.
  TimeDependentData D;
  D.mu = 1;
  D.mk = 1;
  D.algebra = Array({1, 1, 1});
  D.rho0 = [](double, const Vector& u) { return Vector(u.cwiseAbs2()); };
  D.rhoV = [](double, const Vector&) { return Matrix(Matrix::Ones(1, 1)); };
  D.c0 = [](double, const Vector& u) { return Matrix(Matrix::Constant(1, 1, -2 * u(0))); };
  const FibredAlgebroidPair FA = builderTimeDependent(D);
  EXPECT_LT(maxStructureResidual(FA, 10), 1e-8);
  const Lagrangian L = quadraticLagrangian(Matrix::Ones(1, 1), 1);
  EXPECT_THROW(integrateMechanics(FA, L, state(0.0, Vector::Ones(1), Vector::Zero(1)), 3.0, 0.01), FlowBlowUp);
}

TEST(Mechanics, RejectsBadSteps) {
  const FibredAlgebroidPair FA = builderTimeDependent(rigidBodyData());
  const Lagrangian L = quadraticLagrangian(vec3(1, 2, 3), 0);
  EXPECT_THROW(integrateMechanics(FA, L, state(0.0, Vector(0), vec3(1, 1, 1)), 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(integrateMechanics(FA, L, state(0.0, Vector(0), vec3(1, 1, 1)), 0.0, 0.1), std::invalid_argument);
}

// ------------------------------------------------------------ Chern-Simons

TEST(ChernSimons, LoweredConstantsOfSo3AreTheLeviCivitaSymbol) {
  const ChernSimonsData D{so3Constants<double>(), Matrix::Identity(3, 3)};
  const Array Cl = D.loweredConstants();
  forEachIndex(Cl.shape(), [&](std::span<const int> i) {
    EXPECT_EQ(Cl(i[0], i[1], i[2]), permutationSign(std::array<int, 3>{i[0], i[1], i[2]}));
  });
}

TEST(ChernSimons, AbelianLagrangianVanishes) {
  const auto [FA, L] = builderChernSimons({Array({2, 2, 2}), Matrix::Identity(2, 2)});
  std::mt19937_64 rng(110);
  for (int k = 0; k < 10; ++k) {
    const JetPoint p = randomJet(3, 0, 2, rng);
    EXPECT_EQ(L.value(p), 0.0);
    EXPECT_EQ(L.gradientAt(p).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(ChernSimons, AnalyticPartialsMatchFiniteDifferences) {
  const auto [FA, L] = builderChernSimons({so3Constants<double>(), Matrix::Identity(3, 3)});
  Lagrangian fd;
  fd.value = L.value;
  std::mt19937_64 rng(111);
  for (int k = 0; k < 5; ++k) {
    const JetPoint p = randomJet(3, 0, 3, rng);
    EXPECT_LT((L.gradientAt(p) - fd.gradientAt(p)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((L.hessianAt(p) - fd.hessianAt(p)).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(ChernSimons, RejectsInvalidData) {
  const Array C = so3Constants<double>();
  EXPECT_THROW(builderChernSimons({C, Matrix(Vector(vec3(1, 2, 3)).asDiagonal())}), std::invalid_argument);
  EXPECT_THROW(builderChernSimons({C, Matrix(Vector(vec3(1, 1, 0)).asDiagonal())}), std::invalid_argument);
  Matrix skew = Matrix::Identity(3, 3);
  skew(0, 1) = 0.5;
  EXPECT_THROW(builderChernSimons({C, skew}), std::invalid_argument);
  EXPECT_THROW(builderChernSimons({C, Matrix::Identity(2, 2)}), std::invalid_argument);
}

TEST(FlatConnection, IdentityGaugeGivesZero) {
  MatrixGauge g;
  g.element = [](const Vector&) { return CMatrix(CMatrix::Identity(2, 2)); };
  const DiscretizedSection phi = flatConnectionGenerator(g, su2Basis(), GridSpec::periodicBox(3, 4));
  EXPECT_EQ(phi.yData().cwiseAbs().maxCoeff(), 0.0);
}

TEST(FlatConnection, SingleGeneratorIsTheGradient) {
  // g = exp(f tau_3) gives A_a = d_a f tau_3.
  auto f = [](const Vector& x) { return std::sin(x(0)) + 0.5 * std::cos(x(1) - x(2)); };
  auto df = [](const Vector& x) { return vec3(std::cos(x(0)), -0.5 * std::sin(x(1) - x(2)), 0.5 * std::sin(x(1) - x(2))); };
  MatrixGauge g;
  g.element = [f](const Vector& x) { return su2Exp(vec3(0, 0, f(x))); };
  const GridSpec grid = GridSpec::periodicBox(3, 6);
  const DiscretizedSection numeric = flatConnectionGenerator(g, su2Basis(), grid);
  MatrixGauge exact = g;
  exact.derivative = [f, df](const Vector& x) {
    const CMatrix t3 = su2Basis()[2];
    const CMatrix gx = su2Exp(vec3(0, 0, f(x)));
    const Vector d = df(x);
    return std::vector<CMatrix>{d(0) * t3 * gx, d(1) * t3 * gx, d(2) * t3 * gx};
  };
  const DiscretizedSection analytic = flatConnectionGenerator(exact, su2Basis(), grid);
  for (std::size_t n = 0; n < grid.nodeCount(); ++n) {
    Matrix expected = Matrix::Zero(3, 3);
    expected.row(2) = df(grid.coordinates(n)).transpose();
    EXPECT_LT((analytic.y(n) - expected).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((numeric.y(n) - expected).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(FlatConnection, ProjectionFailureIsReported) {
  MatrixGauge g;
  g.element = [](const Vector& x) {
    CMatrix m = CMatrix::Identity(2, 2);
    m(0, 0) = std::exp(std::sin(x(0)));
    return m;
  };
  EXPECT_THROW(flatConnectionGenerator(g, su2Basis(), GridSpec::periodicBox(3, 4)), ProjectionError);
}

TEST(ChernSimons, EulerLagrangeResidualIsBoundedByTheMorphismResidual) {
  const ChernSimonsData D{so3Constants<double>(), Matrix::Identity(3, 3)};
  const auto [FA, L] = builderChernSimons(D);
  const MatrixGauge gauge = su2FourierGauge(120);
  double prev = 0;
  for (int n : {12, 24}) {
    const DiscretizedSection phi = flatConnectionGenerator(gauge, su2Basis(), GridSpec::periodicBox(3, n));
    double el = 0, mm = 0;
    for (std::size_t k = 0; k < phi.nodeCount(); ++k) {
      el = std::max(el, elResidual(FA, L, phi, k).cwiseAbs().maxCoeff());
      mm = std::max(mm, morphismResidual(FA, phi, k).maxAbs());
    }
    EXPECT_LE(el, oracles::chernSimonsKappa(D, phi) * mm);
    if (prev > 0) {
      EXPECT_GT(prev / mm, 3.5);
      EXPECT_LT(prev / mm, 4.5);
    }
    prev = mm;
  }
}

TEST(ChernSimons, LagrangianDifferenceIdentityHoldsOffShell) {
  const ChernSimonsData D{so3Constants<double>(), Matrix::Identity(3, 3)};
  auto f = std::make_shared<FourierField>(3, 9, 121);
  const DiscretizedSection phi = DiscretizedSection::sample(
      GridSpec::periodicBox(3, 8), 0, 3, [&](const Vector& x) { return std::pair{Vector(0), Matrix((*f)(x).reshaped(3, 3))}; });
  for (std::size_t n = 0; n < phi.nodeCount(); ++n) {
    const ChernSimonsDensities d = chernSimonsDensities(D, phi, n);
    EXPECT_LT(chernSimonsLagrangianDifference(D, phi, n), 1e-12);
    // the literal combination L' - L - coupling is -2L
    EXPECT_NEAR(d.conventional - d.lagrangian - d.coupling, -2 * d.lagrangian, 1e-12);
  }
  const DiscretizedSection zero(GridSpec::periodicBox(3, 4), 0, 3);
  EXPECT_EQ(chernSimonsLagrangianDifference(D, zero, 5), 0.0);
}

TEST(ChernSimons, CouplingTermIsSecondOrderOnFlatFields) {
  const ChernSimonsData D{so3Constants<double>(), Matrix::Identity(3, 3)};
  const MatrixGauge gauge = su2FourierGauge(122);
  auto worst = [&](int n) {
    const DiscretizedSection phi = flatConnectionGenerator(gauge, su2Basis(), GridSpec::periodicBox(3, n));
    double w = 0;
    for (std::size_t k = 0; k < phi.nodeCount(); ++k) w = std::max(w, std::abs(chernSimonsDensities(D, phi, k).coupling));
    return w;
  };
  const double ratio = worst(12) / worst(24);
  EXPECT_GT(ratio, 3.5);
  EXPECT_LT(ratio, 4.5);
}

// ------------------------------------------------------------------ Atiyah

TEST(Atiyah, FlatLineReducesToTheRigidBody) {
  const FibredAlgebroidPair atiyah = builderAtiyah({1, so3Constants<double>(), {}});
  const FibredAlgebroidPair body = builderTimeDependent(rigidBodyData());
  const Lagrangian L = quadraticLagrangian(vec3(1, 2, 3), 0);
  const MechanicsState s0 = state(0.0, Vector(0), vec3(1, -0.5, 0.25));
  const MechanicsTrajectory a = integrateMechanics(atiyah, L, s0, 1.0, 0.01);
  const MechanicsTrajectory b = integrateMechanics(body, L, s0, 1.0, 0.01);
  ASSERT_EQ(a.states.size(), b.states.size());
  for (std::size_t n = 0; n < a.states.size(); ++n) EXPECT_EQ(a.states[n].y, b.states[n].y);
}

TEST(Atiyah, ConstantCurvatureFixesTheFieldStrength) {
  const double omega = 0.7;
  const FibredAlgebroidPair FA = builderAtiyah({2, Array({1, 1, 1}), [omega](const Vector&) {
                                                  Array O({2, 2, 1});
                                                  O(0, 1, 0) = omega;
                                                  O(1, 0, 0) = -omega;
                                                  return O;
                                                }});
  GridSpec g;
  g.extents = {7, 7};
  g.spacing = {0.2, 0.2};
  g.origin = {-0.6, -0.6};
  g.boundary = Boundary::OneSided;
  auto field = [&](double strength) {
    return DiscretizedSection::sample(g, 0, 1, [strength](const Vector& x) {
      Matrix y(1, 2);
      y << -0.5 * strength * x(1), 0.5 * strength * x(0);
      return std::pair{Vector(0), y};
    });
  };
  EXPECT_LT(residualReport(FA, field(omega), 0.0).morphismMax, 1e-14);
  EXPECT_NEAR(residualReport(FA, field(omega + 0.1), 0.0).morphismMax, 0.1, 1e-14);
}
