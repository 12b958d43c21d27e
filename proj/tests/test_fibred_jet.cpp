#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace algebroid;
using namespace testsupport;

namespace {

AffineDualSection constantAffine(const Matrix& base, const Matrix& kernel) {
  return {[base, kernel](const Vector&, const Vector&) { return AffineDualSection::Value{base, kernel}; }};
}

AffineDualSection fourierAffine(int r, int mu, int mk, std::uint64_t seed) {
  auto f = std::make_shared<FourierField>(r + mu, (r + mk) * r, seed);
  return {[f, r, mk](const Vector& x, const Vector& u) {
    Vector z(x.size() + u.size());
    z << x, u;
    const Matrix all = (*f)(z).reshaped(r + mk, r);  // rows: e^b then e^alpha; columns: ebar_c
    return AffineDualSection::Value{all.topRows(r), all.bottomRows(mk)};
  }};
}

Vector stack(const Vector& x, const Vector& u) {
  Vector z(x.size() + u.size());
  z << x, u;
  return z;
}

}  // namespace

TEST(AffineEval, CoordinateFunction) {
  Matrix kernel = Matrix::Zero(2, 3);
  kernel(1, 2) = 1;
  const JetPoint p{Vector::Zero(3), Vector::Zero(1), (Matrix(2, 3) << 1, 2, 3, 4, 5, 6).finished()};
  EXPECT_EQ(affineEval(constantAffine(Matrix::Zero(3, 3), kernel), p), 6.0);
}

TEST(AffineEval, TraceOfIdentity) {
  const JetPoint p{Vector::Zero(3), Vector::Zero(0), Matrix::Random(2, 3)};
  EXPECT_EQ(affineEval(constantAffine(Matrix::Identity(3, 3), Matrix::Zero(2, 3)), p), 3.0);
}

TEST(AffineEval, MatchesTraceOfComposition) {
  std::mt19937_64 rng(10);
  const int r = 3, mu = 2, mk = 4;
  for (int t = 0; t < 10; ++t) {
    const AffineDualSection theta = fourierAffine(r, mu, mk, 20 + t);
    const JetPoint p = randomJet(r, mu, mk, rng);
    const auto v = theta.coeffs(p.x, p.u);
    // theta as a map E -> F (rows ebar_c, columns e_b then e_alpha), phi = [I; y]
    Matrix Theta(r, r + mk);
    Theta << v.base.transpose(), v.kernel.transpose();
    Matrix Phi(r + mk, r);
    Phi << Matrix::Identity(r, r), p.y;
    EXPECT_NEAR(affineEval(theta, p), (Theta * Phi).trace(), 1e-12);
  }
}

TEST(TotalDerivative, BaseFunctionInStandardCase) {
  const FibredAlgebroidPair FA = builderStandard(fourierConnection(2, 1, 3));
  const FibreFunction f{[](const Vector& x, const Vector&) { return std::sin(x(0)) * x(1); }, {}};
  const JetPoint p{(Vector(2) << 0.3, -0.7).finished(), Vector::Constant(1, 0.4), Matrix::Constant(1, 2, 2.0)};
  EXPECT_NEAR(totalDerivative(FA, f, p, 0), std::cos(0.3) * -0.7, 1e-8);
  EXPECT_NEAR(totalDerivative(FA, f, p, 1), std::sin(0.3), 1e-8);
}

TEST(TotalDerivative, FibreCoordinate) {
  const FibredAlgebroidPair FA = stretchedProductPair();
  std::mt19937_64 rng(11);
  const JetPoint p = randomJet(2, 3, 3, rng);
  const FibredCoefficients c = FA.coefficients(p.x, p.u);
  for (int A = 0; A < 3; ++A) {
    const FibreFunction f{[A](const Vector&, const Vector& u) { return u(A); }, {}};
    for (int a = 0; a < 2; ++a) {
      const double expected = c.anchorHorizontal(a, A) + c.anchorVertical.col(A).dot(p.y.col(a));
      EXPECT_NEAR(totalDerivative(FA, f, p, a), expected, 1e-9);
    }
  }
}

TEST(TotalDerivative, HeavyTopHandContraction) {
  const FibredAlgebroidPair FA = builderTimeDependent(heavyTopData());
  const JetPoint p{Vector::Constant(1, 0.0), (Vector(3) << 1, 2, 3).finished(), (Matrix(3, 1) << 0.5, -1, 2).finished()};
  // du/dt = u x y, first component u2 y3 - u3 y2 = 2*2 - 3*(-1)
  const FibreFunction f{[](const Vector&, const Vector& u) { return u(0); },
                        [](const Vector& x, const Vector& u) {
                          FibreFunction::Gradient g{Vector::Zero(x.size()), Vector::Zero(u.size())};
                          g.du(0) = 1;
                          return g;
                        }};
  EXPECT_DOUBLE_EQ(totalDerivative(FA, f, p, 0), 7.0);
}

TEST(ZFunctions, AtOriginAreTheBracketCoefficients) {
  const FibredAlgebroidPair FA = builderStandard(fourierConnection(2, 2, 5));
  const JetPoint p{Vector::Constant(2, 0.1), Vector::Constant(2, -0.3), Matrix::Zero(2, 2)};
  const FibredCoefficients c = FA.coefficients(p.x, p.u);
  const ZFunctions Z = zFunctions(FA, p);
  for (int a = 0; a < 2; ++a)
    for (int al = 0; al < 2; ++al) {
      for (int g = 0; g < 2; ++g) EXPECT_EQ(Z.kernel(a, g, al), c.bracketMixed(a, g, al));
      for (int cc = 0; cc < 2; ++cc) EXPECT_EQ(Z.base(a, cc, al), c.bracketHorizontal(a, cc, al));
    }
}

TEST(ZFunctions, FlatAtiyahIsTheAdjointAction) {
  const FibredAlgebroidPair FA = builderAtiyah({2, so3Constants<double>(), {}});
  std::mt19937_64 rng(12);
  const JetPoint p = randomJet(2, 0, 3, rng);
  const Array C = so3Constants<double>();
  const ZFunctions Z = zFunctions(FA, p);
  for (int a = 0; a < 2; ++a)
    for (int g = 0; g < 3; ++g)
      for (int al = 0; al < 3; ++al) {
        double expected = 0;
        for (int b = 0; b < 3; ++b) expected += C(b, g, al) * p.y(b, a);
        EXPECT_NEAR(Z.kernel(a, g, al), expected, 1e-15);
      }
}

TEST(ZFunctions, AgreeWithLieDerivativeOfTheCoframe) {
  // Z_{a gamma}^alpha is the affine function of (d_{e_gamma} e^alpha) (x) ebar_a,
  // and Z_{ac}^alpha that of (d_{e_c} e^alpha) (x) ebar_a.
  std::mt19937_64 rng(13);
  for (const FibredAlgebroidPair& FA :
       {builderStandard(fourierConnection(2, 2, 6)), stretchedProductPair(), builderTimeDependent(heavyTopData())}) {
    const int r = FA.baseDim(), mu = FA.fibreDim(), mk = FA.kernelRank(), k = r + mk;
    const Algebroid A = FA.totalAlgebroid();
    const JetPoint p = randomJet(r, mu, mk, rng);
    const Vector z = stack(p.x, p.u);
    const ZFunctions Z = zFunctions(FA, p);
    auto affineOf = [&](int sectionIndex, int al, int a) {
      const Array d = lieDerivative(A, Section::basis(k, sectionIndex, r + mu), Form::coframe(k, r + al, r + mu), z);
      Matrix base = Matrix::Zero(r, r), kernel = Matrix::Zero(mk, r);
      for (int b = 0; b < r; ++b) base(b, a) = d(b);
      for (int be = 0; be < mk; ++be) kernel(be, a) = d(r + be);
      return affineEval(constantAffine(base, kernel), p);
    };
    for (int a = 0; a < r; ++a)
      for (int al = 0; al < mk; ++al) {
        for (int g = 0; g < mk; ++g) EXPECT_NEAR(Z.kernel(a, g, al), affineOf(r + g, al, a), 1e-8);
        for (int c = 0; c < r; ++c) EXPECT_NEAR(Z.base(a, c, al), affineOf(c, al, a), 1e-8);
      }
  }
}

TEST(CompleteLift, ZeroSection) {
  const FibredAlgebroidPair FA = stretchedProductPair();
  std::mt19937_64 rng(14);
  const JetPoint p = randomJet(2, 3, 3, rng);
  const JetTangent t = completeLift(FA, ProjectableSection::verticalSection([](const Vector&, const Vector&) {
                                      return Vector::Zero(3).eval();
                                    }),
                                    p);
  EXPECT_EQ(t.dx.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(t.du.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(t.dy.cwiseAbs().maxCoeff(), 0.0);
}

TEST(CompleteLift, ConstantVerticalOnAbelianKernel) {
  const FibredAlgebroidPair FA = builderTimeDependent(freeParticleData(3));
  const Vector s = (Vector(3) << 1, -2, 0.5).finished();
  std::mt19937_64 rng(15);
  const JetTangent t =
      completeLift(FA, ProjectableSection::verticalSection([s](const Vector&, const Vector&) { return s; }),
                   randomJet(1, 3, 3, rng));
  EXPECT_EQ(t.du, s);
  EXPECT_EQ(t.dy.cwiseAbs().maxCoeff(), 0.0);
}

TEST(CompleteLift, IsLinearInTheSection) {
  const FibredAlgebroidPair FA = builderStandard(fourierConnection(2, 2, 7));
  std::mt19937_64 rng(16);
  ProjectableSection s1 = fourierVertical(2, 2, 2, 30), s2 = fourierVertical(2, 2, 2, 31);
  ProjectableSection b1 = s1, b2 = s2;
  b1.base = [](const Vector& x) { return (Vector(2) << std::sin(x(1)), x(0) * x(0)).finished(); };
  b2.base = [](const Vector& x) { return (Vector(2) << 1.0, std::cos(x(0))).finished(); };
  for (const auto& [u, v] : {std::pair{s1, s2}, std::pair{b1, b2}}) {
    ProjectableSection sum = u;
    sum.vertical = [u, v](const Vector& x, const Vector& w) { return (u.vertical(x, w) + 2.5 * v.vertical(x, w)).eval(); };
    if (u.base) sum.base = [u, v](const Vector& x) { return (u.base(x) + 2.5 * v.base(x)).eval(); };
    const JetPoint p = randomJet(2, 2, 2, rng);
    const JetTangent a = completeLift(FA, u, p), b = completeLift(FA, v, p), c = completeLift(FA, sum, p);
    EXPECT_LT((c.dx - a.dx - 2.5 * b.dx).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((c.du - a.du - 2.5 * b.du).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((c.dy - a.dy - 2.5 * b.dy).cwiseAbs().maxCoeff(), 1e-9);
  }
}

namespace {

// Flow of the jet point under the prolongation of the flow of a vertical
// section: y'_a^beta = M^beta_a + M^beta_alpha y_a^alpha at the moved point.
JetPoint prolongedFlow(const FibredAlgebroidPair& FA, const ProjectableSection& sigma, const JetPoint& p, double s) {
  const int r = FA.baseDim(), mu = FA.fibreDim(), mk = FA.kernelRank();
  const auto f = flowOfSection(FA.totalAlgebroid(), asTotalSection(sigma, r, mu), s, stack(p.x, p.u), 50);
  JetPoint q{f.base.head(r), f.base.tail(mu), Matrix(mk, r)};
  q.y = f.matrix.block(r, 0, mk, r) + f.matrix.block(r, r, mk, mk) * p.y;
  return q;
}

}  // namespace

TEST(CompleteLift, MatchesProlongedFlowOfVerticalSections) {
  std::mt19937_64 rng(17);
  const double s = 1e-3;
  for (const FibredAlgebroidPair& FA : {builderTimeDependent(rigidBodyData()), builderTimeDependent(heavyTopData()),
                                        builderStandard(fourierConnection(2, 2, 8)), stretchedProductPair()}) {
    const int r = FA.baseDim(), mu = FA.fibreDim(), mk = FA.kernelRank();
    for (int t = 0; t < 3; ++t) {
      const ProjectableSection sigma = fourierVertical(r, mu, mk, 40 + t);
      const JetPoint p = randomJet(r, mu, mk, rng);
      const JetPoint fwd = prolongedFlow(FA, sigma, p, s), bwd = prolongedFlow(FA, sigma, p, -s);
      const JetTangent lift = completeLift(FA, sigma, p);
      EXPECT_LT(((fwd.x - bwd.x) / (2 * s)).cwiseAbs().maxCoeff(), 1e-12);
      if (mu) EXPECT_LT(((fwd.u - bwd.u) / (2 * s) - lift.du).cwiseAbs().maxCoeff(), 1e-5);
      EXPECT_LT(((fwd.y - bwd.y) / (2 * s) - lift.dy).cwiseAbs().maxCoeff(), 1e-5);
    }
  }
}

TEST(CompleteLift, LieDerivativeOfAffineFunctionsMatchesTensorRule) {
  // For vertical sigma, d_sigma theta = pi o d_sigma P with P the lift of theta
  // to E* (x) E; the E-bracket term is vertical and drops, so each ebar_c
  // component is the Lie derivative of the 1-form theta^c on E.
  std::mt19937_64 rng(18);
  for (const FibredAlgebroidPair& FA : {builderStandard(fourierConnection(2, 2, 9)), stretchedProductPair(),
                                        builderTimeDependent(heavyTopData())}) {
    const int r = FA.baseDim(), mu = FA.fibreDim(), mk = FA.kernelRank(), k = r + mk;
    const Algebroid A = FA.totalAlgebroid();
    for (int t = 0; t < 3; ++t) {
      const AffineDualSection theta = fourierAffine(r, mu, mk, 50 + t);
      const ProjectableSection sigma = fourierVertical(r, mu, mk, 60 + t);
      const JetPoint p = randomJet(r, mu, mk, rng);
      double expected = 0;
      for (int c = 0; c < r; ++c) {
        Form oneForm;
        oneForm.degree = 1;
        oneForm.coeffs = [theta, c, r, mu, k](const Vector& z) {
          const auto v = theta.coeffs(z.head(r), z.tail(mu));
          Array a({k});
          a.data() << v.base.col(c), v.kernel.col(c);
          return a;
        };
        const Array d = lieDerivative(A, asTotalSection(sigma, r, mu), oneForm, stack(p.x, p.u));
        expected += d(c);
        for (int be = 0; be < mk; ++be) expected += d(r + be) * p.y(be, c);
      }
      EXPECT_NEAR(lieDerivativeAffine(FA, sigma, theta, p), expected, 1e-6);
    }
  }
}

TEST(FibredAlgebroidPair, RejectsMalformedCoefficients) {
  const FibredAlgebroidPair bad(2, 1, 1, [](const Vector&, const Vector&) {
    FibredCoefficients c = FibredCoefficients::zero(2, 1, 1);
    c.anchorVertical = Matrix::Zero(2, 1);
    return c;
  });
  EXPECT_THROW(bad.coefficients(Vector::Zero(2), Vector::Zero(1)), DimensionError);
  EXPECT_THROW(FibredAlgebroidPair(0, 1, 1, [](const Vector&, const Vector&) { return FibredCoefficients{}; }),
               DimensionError);
}

TEST(FibredAlgebroidPair, AntisymmetrizesPairedIndices) {
  const FibredAlgebroidPair FA(2, 0, 1, [](const Vector&, const Vector&) {
    FibredCoefficients c = FibredCoefficients::zero(2, 0, 1);
    c.bracketHorizontal(0, 1, 0) = 2;
    return c;
  });
  const FibredCoefficients c = FA.coefficients(Vector::Zero(2), Vector::Zero(0));
  EXPECT_EQ(c.bracketHorizontal(0, 1, 0), 1.0);
  EXPECT_EQ(c.bracketHorizontal(1, 0, 0), -1.0);
}
