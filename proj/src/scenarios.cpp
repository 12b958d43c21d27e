#include "algebroid/scenarios.hpp"

#include "algebroid/random_fields.hpp"

#include <cmath>
#include <memory>

namespace algebroid {

namespace {

// (i, A, j) derivative tensor of a matrix-valued map by central differences
Array matrixJacobian(const std::function<Matrix(const Vector&)>& f, const Vector& z, int rows, int cols, double h) {
  Array d({rows, cols, static_cast<int>(z.size())});
  Vector zp = z;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    zp(j) = z(j) + h;
    const Matrix fp = f(zp);
    zp(j) = z(j) - h;
    const Matrix fm = f(zp);
    zp(j) = z(j);
    for (int i = 0; i < rows; ++i)
      for (int A = 0; A < cols; ++A) d(i, A, static_cast<int>(j)) = (fp(i, A) - fm(i, A)) / (2 * h);
  }
  return d;
}

}  // namespace

// ---------------------------------------------------------------- standard

Array StandardCaseData::gammaDx(const Vector& x, const Vector& u) const {
  if (connectionDx) return connectionDx(x, u);
  return matrixJacobian([&](const Vector& xx) { return connection(xx, u); }, x, r, mu, step);
}

Array StandardCaseData::gammaDu(const Vector& x, const Vector& u) const {
  if (connectionDu) return connectionDu(x, u);
  return matrixJacobian([&](const Vector& uu) { return connection(x, uu); }, u, r, mu, step);
}

Array StandardCaseData::curvature(const Vector& x, const Vector& u) const {
  const Matrix G = connection(x, u);
  const Array Dx = gammaDx(x, u);
  const Array Du = gammaDu(x, u);
  // e_j(Gamma_i^A) = d_j Gamma_i^A + Gamma_j^B dGamma_i^A/du^B
  auto horizontal = [&](int j, int i, int A) {
    double v = Dx(i, A, j);
    for (int B = 0; B < mu; ++B) v += G(j, B) * Du(i, A, B);
    return v;
  };
  Array R({r, r, mu});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int A = 0; A < mu; ++A) R(i, j, A) = horizontal(j, i, A) - horizontal(i, j, A);
  return R;
}

StandardCaseData fourierConnection(int r, int mu, std::uint64_t seed, double amplitude) {
  FourierField::Options opts;
  opts.amplitude = amplitude;
  opts.offset = 0.2;
  auto f = std::make_shared<FourierField>(r + mu, r * mu, seed, opts);
  auto stack = [](const Vector& x, const Vector& u) {
    Vector z(x.size() + u.size());
    z << x, u;
    return z;
  };
  StandardCaseData D;
  D.r = r;
  D.mu = mu;
  // Gamma_i^A is output i + r A
  D.connection = [=](const Vector& x, const Vector& u) { return (*f)(stack(x, u)).reshaped(r, mu).eval(); };
  D.connectionDx = [=](const Vector& x, const Vector& u) {
    const Matrix J = f->jacobian(stack(x, u));
    Array d({r, mu, r});
    for (int i = 0; i < r; ++i)
      for (int A = 0; A < mu; ++A)
        for (int j = 0; j < r; ++j) d(i, A, j) = J(i + r * A, j);
    return d;
  };
  D.connectionDu = [=](const Vector& x, const Vector& u) {
    const Matrix J = f->jacobian(stack(x, u));
    Array d({r, mu, mu});
    for (int i = 0; i < r; ++i)
      for (int A = 0; A < mu; ++A)
        for (int B = 0; B < mu; ++B) d(i, A, B) = J(i + r * A, r + B);
    return d;
  };
  return D;
}

FibredAlgebroidPair builderStandard(const StandardCaseData& D) {
  requireDims(D.r >= 1 && D.mu >= 1, "builderStandard: need r >= 1 and m_u >= 1");
  requireDims(static_cast<bool>(D.connection), "builderStandard: connection callback required");
  return FibredAlgebroidPair(D.r, D.mu, D.mu, [D](const Vector& x, const Vector& u) {
    FibredCoefficients c = FibredCoefficients::zero(D.r, D.mu, D.mu);
    const Matrix G = D.connection(x, u);
    requireDims(G.rows() == D.r && G.cols() == D.mu, "builderStandard: connection must be r x m_u");
    c.anchorHorizontal = G;
    c.anchorVertical = Matrix::Identity(D.mu, D.mu);
    const Array R = D.curvature(x, u);
    const Array Du = D.gammaDu(x, u);
    for (int i = 0; i < D.r; ++i)
      for (int A = 0; A < D.mu; ++A) {
        for (int j = 0; j < D.r; ++j) c.bracketHorizontal(i, j, A) = -R(i, j, A);
        for (int B = 0; B < D.mu; ++B) c.bracketMixed(i, B, A) = -Du(i, A, B);
      }
    return c;
  });
}

// ---------------------------------------------------------------- mechanics

FibredAlgebroidPair builderTimeDependent(const TimeDependentData& D) {
  requireDims(D.mu >= 0 && D.mk >= 0, "builderTimeDependent: negative dimension");
  requireDims(D.algebra.shape() == std::vector<int>{D.mk, D.mk, D.mk}, "builderTimeDependent: algebra must be m_k^3");
  return FibredAlgebroidPair(1, D.mu, D.mk, [D](const Vector& x, const Vector& u) {
    FibredCoefficients c = FibredCoefficients::zero(1, D.mu, D.mk);
    const double t = x(0);
    if (D.rho0) c.anchorHorizontal.row(0) = D.rho0(t, u).transpose();
    if (D.rhoV) c.anchorVertical = D.rhoV(t, u);
    if (D.c0) {
      const Matrix m = D.c0(t, u);
      requireDims(m.rows() == D.mk && m.cols() == D.mk, "builderTimeDependent: C_0 must be m_k x m_k");
      for (int a = 0; a < D.mk; ++a)
        for (int g = 0; g < D.mk; ++g) c.bracketMixed(0, a, g) = m(a, g);
    }
    c.bracketVertical = D.algebra;
    return c;
  });
}

TimeDependentData rigidBodyData() {
  TimeDependentData D;
  D.mu = 0;
  D.mk = 3;
  D.algebra = so3Constants<double>();
  return D;
}

TimeDependentData heavyTopData() {
  TimeDependentData D;
  D.mu = 3;
  D.mk = 3;
  D.algebra = so3Constants<double>();
  D.rhoV = [](double, const Vector& u) {
    Matrix rho = Matrix::Zero(3, 3);
    for (int al = 0; al < 3; ++al)
      for (int A = 0; A < 3; ++A)
        for (int B = 0; B < 3; ++B) rho(al, A) += permutationSign(std::array<int, 3>{al, A, B}) * u(B);
    return rho;
  };
  return D;
}

TimeDependentData freeParticleData(int m) {
  TimeDependentData D;
  D.mu = m;
  D.mk = m;
  D.algebra = Array({m, m, m});
  D.rhoV = [m](double, const Vector&) { return Matrix::Identity(m, m).eval(); };
  return D;
}

namespace {

// Compensated summation: sum + low tracks the exact running total and low
// stays within half an ulp of sum.
void compensatedAdd(Vector& sum, Vector& low, const Vector& inc) {
  for (Eigen::Index i = 0; i < sum.size(); ++i) {
    const double d = inc(i) + low(i);
    const double t = sum(i) + d;
    low(i) = std::abs(sum(i)) >= std::abs(d) ? (sum(i) - t) + d : (d - t) + sum(i);
    sum(i) = t;
  }
}

}  // namespace

JetPoint mechanicsJet(const MechanicsState& s) { return {Vector::Constant(1, s.t), s.u, s.y}; }

std::pair<Vector, Vector> mechanicsRate(const FibredAlgebroidPair& FA, const Lagrangian& L, const MechanicsState& s) {
  requireDims(FA.baseDim() == 1, "mechanics requires r = 1");
  const JetPoint p = mechanicsJet(s);
  requireJetShape(FA, p);
  const FibredCoefficients c = FA.coefficients(p.x, p.u);
  const JetIndex J = jetIndex(p);
  const int mk = J.mk;

  const Vector uRate = c.anchorHorizontal.row(0).transpose() + c.anchorVertical.transpose() * s.y;
  const ZFunctions Z = zFunctions(c, p);
  const Vector g = L.gradientAt(p);
  const Vector P = g.tail(mk);
  const Vector Lu = g.segment(J.r, J.mu);
  Vector rhs = c.anchorVertical * Lu;
  for (int al = 0; al < mk; ++al)
    for (int ga = 0; ga < mk; ++ga) rhs(al) += Z.kernel(0, al, ga) * P(ga);

  const Matrix H = L.hessianAt(p);
  const Matrix Hyy = H.bottomRightCorner(mk, mk);
  rhs -= H.block(J.y(0, 0), J.x(0), mk, 1);
  rhs -= H.block(J.y(0, 0), J.u(0), mk, J.mu) * uRate;

  const Eigen::JacobiSVD<Matrix> svd(Hyy);
  const Vector sv = svd.singularValues();
  if (mk > 0 && (!(sv(mk - 1) > 0) || sv(0) / sv(mk - 1) > 1e12))
    throw SingularHessian("Hessian of the Lagrangian in y is singular or ill-conditioned (condition > 1e12)");
  return {uRate, Hyy.fullPivLu().solve(rhs)};
}

MechanicsTrajectory integrateMechanics(const FibredAlgebroidPair& FA, const Lagrangian& L, const MechanicsState& s0,
                                       double tEnd, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("integrateMechanics: dt must be positive");
  const long steps = std::lround((tEnd - s0.t) / dt);
  if (steps < 1) throw std::invalid_argument("integrateMechanics: t_end must exceed the start time by at least dt");
  const double h = (tEnd - s0.t) / static_cast<double>(steps);

  MechanicsTrajectory traj;
  traj.states.reserve(static_cast<std::size_t>(steps) + 1);
  MechanicsState s = s0;
  if (s.uLow.size() != s.u.size()) s.uLow = Vector::Zero(s.u.size());
  if (s.yLow.size() != s.y.size()) s.yLow = Vector::Zero(s.y.size());
  traj.states.push_back(s);
  auto shifted = [](const MechanicsState& a, double t, const std::pair<Vector, Vector>& k, double w) {
    return MechanicsState{t, a.u + w * k.first, a.y + w * k.second, {}, {}};
  };
  for (long n = 0; n < steps; ++n) {
    const double t = s0.t + static_cast<double>(n) * h;
    const auto k1 = mechanicsRate(FA, L, s);
    const auto k2 = mechanicsRate(FA, L, shifted(s, t + h / 2, k1, h / 2));
    const auto k3 = mechanicsRate(FA, L, shifted(s, t + h / 2, k2, h / 2));
    const auto k4 = mechanicsRate(FA, L, shifted(s, t + h, k3, h));
    s.t = s0.t + static_cast<double>(n + 1) * h;
    compensatedAdd(s.u, s.uLow, h / 6 * (k1.first + 2 * k2.first + 2 * k3.first + k4.first));
    compensatedAdd(s.y, s.yLow, h / 6 * (k1.second + 2 * k2.second + 2 * k3.second + k4.second));
    if (!s.u.allFinite() || !s.y.allFinite())
      throw FlowBlowUp("integrateMechanics: non-finite state at t = " + std::to_string(s.t));
    traj.states.push_back(s);
  }

  // residual of the momentum equation on the samples
  const std::size_t N = traj.states.size();
  const int mk = FA.kernelRank();
  std::vector<Vector> P(N), rhs(N);
  for (std::size_t n = 0; n < N; ++n) {
    const JetPoint p = mechanicsJet(traj.states[n]);
    const FibredCoefficients c = FA.coefficients(p.x, p.u);
    const ZFunctions Z = zFunctions(c, p);
    P[n] = L.momentum(p).col(0);
    rhs[n] = c.anchorVertical * L.fibreGradient(p);
    for (int al = 0; al < mk; ++al)
      for (int ga = 0; ga < mk; ++ga) rhs[n](al) += Z.kernel(0, al, ga) * P[n](ga);
  }
  traj.elResidual.assign(N, 0.0);
  for (std::size_t n = 2; n + 2 < N; ++n) {
    const Vector dP = (P[n - 2] - 8 * P[n - 1] + 8 * P[n + 1] - P[n + 2]) / (12 * h);
    traj.elResidual[n] = mk ? (dP - rhs[n]).cwiseAbs().maxCoeff() : 0.0;
  }
  return traj;
}

double mechanicsEnergy(const Lagrangian& L, const MechanicsState& s) {
  const JetPoint p = mechanicsJet(s);
  return L.momentum(p).col(0).dot(s.y) - L.value(p);
}

DiscretizedSection trajectorySection(const MechanicsTrajectory& traj) {
  requireDims(traj.states.size() >= 3, "trajectorySection: need at least three samples");
  const MechanicsState& s0 = traj.states.front();
  GridSpec g;
  g.extents = {static_cast<int>(traj.states.size())};
  g.spacing = {(traj.states.back().t - s0.t) / static_cast<double>(traj.states.size() - 1)};
  g.origin = {s0.t};
  g.boundary = Boundary::OneSided;
  DiscretizedSection phi(g, static_cast<int>(s0.u.size()), static_cast<int>(s0.y.size()));
  for (std::size_t n = 0; n < traj.states.size(); ++n) {
    phi.setU(n, traj.states[n].u);
    phi.setY(n, traj.states[n].y);
  }
  return phi;
}

// -------------------------------------------------------------- Lagrangians

Potential Potential::zero() {
  return {[](const Vector&) { return 0.0; }, [](const Vector& u) { return Vector::Zero(u.size()).eval(); },
          [](const Vector& u) { return Matrix::Zero(u.size(), u.size()).eval(); }};
}

Potential Potential::linear(const Vector& c) {
  return {[c](const Vector& u) { return c.dot(u); }, [c](const Vector&) { return c; },
          [c](const Vector&) { return Matrix::Zero(c.size(), c.size()).eval(); }};
}

Potential Potential::harmonic(double massSq) {
  return {[massSq](const Vector& u) { return 0.5 * massSq * u.squaredNorm(); },
          [massSq](const Vector& u) { return (massSq * u).eval(); },
          [massSq](const Vector& u) { return (massSq * Matrix::Identity(u.size(), u.size())).eval(); }};
}

Lagrangian quadraticLagrangian(const Matrix& weights, int mu, const Potential& V) {
  Lagrangian L;
  const Vector w = weights.reshaped();
  const auto mk = weights.rows();
  const auto r = weights.cols();
  auto check = [mk, r, mu](const JetPoint& p) {
    requireDims(p.y.rows() == mk && p.y.cols() == r && p.u.size() == mu, "quadraticLagrangian: jet shape mismatch");
  };
  L.value = [w, V, check](const JetPoint& p) {
    check(p);
    return 0.5 * w.dot(p.y.reshaped().cwiseAbs2()) - V.value(p.u);
  };
  L.gradient = [w, V, check](const JetPoint& p) {
    check(p);
    Vector g(p.x.size() + p.u.size() + p.y.size());
    g << Vector::Zero(p.x.size()), -V.gradient(p.u), w.cwiseProduct(p.y.reshaped());
    return g;
  };
  L.hessian = [w, V, check](const JetPoint& p) {
    check(p);
    const auto n = p.x.size() + p.u.size() + p.y.size();
    Matrix H = Matrix::Zero(n, n);
    H.block(p.x.size(), p.x.size(), p.u.size(), p.u.size()) = -V.hessian(p.u);
    H.bottomRightCorner(w.size(), w.size()) = w.asDiagonal();
    return H;
  };
  return L;
}

// ------------------------------------------------------------ Chern-Simons

Array ChernSimonsData::loweredConstants() const {
  const int m = algebra.extent(0);
  Array Cl({m, m, m});
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c)
        for (int mu = 0; mu < m; ++mu) Cl(a, b, c) += metric(a, mu) * algebra(b, c, mu);
  return Cl;
}

void ChernSimonsData::validate() const {
  const int m = algebra.rank() == 3 ? algebra.extent(0) : -1;
  if (m < 1 || algebra.shape() != std::vector<int>{m, m, m})
    throw std::invalid_argument("ChernSimonsData: structure constants must be an m x m x m array");
  if (metric.rows() != m || metric.cols() != m) throw std::invalid_argument("ChernSimonsData: metric must be m x m");
  if ((metric - metric.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("ChernSimonsData: metric is not symmetric");
  if (metric.fullPivLu().rank() < m) throw std::invalid_argument("ChernSimonsData: metric is degenerate");
  const Array Cl = loweredConstants();
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c)
        if (std::abs(Cl(a, b, c) + Cl(b, a, c)) > 1e-12 || std::abs(Cl(a, b, c) + Cl(a, c, b)) > 1e-12)
          throw std::invalid_argument("ChernSimonsData: k_{a mu} C_{bc}^mu is not totally skew (metric not ad-invariant)");
}

std::pair<FibredAlgebroidPair, Lagrangian> builderChernSimons(const ChernSimonsData& D) {
  D.validate();
  const int m = D.algebra.extent(0);
  const Array algebra = D.algebra;
  FibredAlgebroidPair FA(3, 0, m, [algebra, m](const Vector&, const Vector&) {
    FibredCoefficients c = FibredCoefficients::zero(3, 0, m);
    c.bracketVertical = algebra;
    return c;
  });

  const Array Cl = D.loweredConstants();
  Lagrangian L;
  L.value = [Cl, m](const JetPoint& p) {
    double v = 0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int c = 0; c < m; ++c) v += Cl(a, b, c) * p.y(a, 0) * p.y(b, 1) * p.y(c, 2);
    return v;
  };
  L.gradient = [Cl, m](const JetPoint& p) {
    const JetIndex J = jetIndex(p);
    Vector g = Vector::Zero(J.size());
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int c = 0; c < m; ++c) {
          const double k = Cl(a, b, c);
          g(J.y(a, 0)) += k * p.y(b, 1) * p.y(c, 2);
          g(J.y(b, 1)) += k * p.y(a, 0) * p.y(c, 2);
          g(J.y(c, 2)) += k * p.y(a, 0) * p.y(b, 1);
        }
    return g;
  };
  L.hessian = [Cl, m](const JetPoint& p) {
    const JetIndex J = jetIndex(p);
    Matrix H = Matrix::Zero(J.size(), J.size());
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int c = 0; c < m; ++c) {
          const double k = Cl(a, b, c);
          H(J.y(a, 0), J.y(b, 1)) += k * p.y(c, 2);
          H(J.y(a, 0), J.y(c, 2)) += k * p.y(b, 1);
          H(J.y(b, 1), J.y(c, 2)) += k * p.y(a, 0);
        }
    return Matrix(H + H.transpose());
  };
  return {FA, L};
}

std::vector<CMatrix> MatrixGauge::derivativeAt(const Vector& x) const {
  if (derivative) return derivative(x);
  std::vector<CMatrix> d;
  Vector xp = x;
  for (Eigen::Index a = 0; a < x.size(); ++a) {
    auto at = [&](double off) {
      xp(a) = x(a) + off;
      CMatrix g = element(xp);
      xp(a) = x(a);
      return g;
    };
    d.push_back((at(-2 * step) - 8.0 * at(-step) + 8.0 * at(step) - at(2 * step)) / (12 * step));
  }
  return d;
}

Vector projectOntoBasis(const CMatrix& A, const std::vector<CMatrix>& basis, double tol) {
  const auto n = A.size();
  Matrix B(2 * n, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    requireDims(basis[k].rows() == A.rows() && basis[k].cols() == A.cols(), "projectOntoBasis: basis shape mismatch");
    B.col(static_cast<Eigen::Index>(k)) << basis[k].reshaped().real(), basis[k].reshaped().imag();
  }
  Vector target(2 * n);
  target << A.reshaped().real(), A.reshaped().imag();
  const Vector coeffs = B.colPivHouseholderQr().solve(target);
  const double miss = (B * coeffs - target).norm();
  if (!(miss <= tol * std::max(1.0, target.norm())))
    throw ProjectionError("projectOntoBasis: matrix is not in the span of the algebra basis (residual " +
                          std::to_string(miss) + ")");
  return coeffs;
}

DiscretizedSection flatConnectionGenerator(const MatrixGauge& gauge, const std::vector<CMatrix>& basis,
                                           const GridSpec& grid, double tol) {
  const int r = grid.dim();
  const int m = static_cast<int>(basis.size());
  DiscretizedSection phi(grid, 0, m);
  for (std::size_t n = 0; n < phi.nodeCount(); ++n) {
    const Vector x = grid.coordinates(n);
    const auto lu = gauge.element(x).partialPivLu();
    const std::vector<CMatrix> dg = gauge.derivativeAt(x);
    requireDims(static_cast<int>(dg.size()) == r, "flatConnectionGenerator: one derivative per axis required");
    Matrix y(m, r);
    for (int a = 0; a < r; ++a) y.col(a) = projectOntoBasis(lu.solve(dg[a]), basis, tol);
    phi.setY(n, y);
  }
  return phi;
}

std::vector<CMatrix> su2Basis() {
  using C = std::complex<double>;
  const C I(0, 1);
  CMatrix s1(2, 2), s2(2, 2), s3(2, 2);
  s1 << 0, 1, 1, 0;
  s2 << 0, -I, I, 0;
  s3 << 1, 0, 0, -1;
  const C k(0, -0.5);
  return {k * s1, k * s2, k * s3};
}

CMatrix su2Exp(const Vector& f) {
  requireDims(f.size() == 3, "su2Exp: need three components");
  const double theta = f.norm();
  CMatrix g = CMatrix::Identity(2, 2);
  if (theta == 0) return g;
  // exp(-(i/2) theta n.sigma) = cos(theta/2) - i sin(theta/2) n.sigma, and tau = -(i/2) sigma
  const auto tau = su2Basis();
  CMatrix ns = CMatrix::Zero(2, 2);
  for (int a = 0; a < 3; ++a) ns += (f(a) / theta) * tau[a];
  return std::cos(theta / 2) * g + 2 * std::sin(theta / 2) * ns;
}

MatrixGauge su2FourierGauge(std::uint64_t seed, double amplitude) {
  FourierField::Options opts;
  opts.amplitude = amplitude;
  opts.offset = 0.0;
  auto f = std::make_shared<FourierField>(3, 3, seed, opts);
  MatrixGauge g;
  g.element = [f](const Vector& x) { return su2Exp((*f)(x)); };
  return g;
}

namespace {

// coefficient of A^p ^ A^q ^ A^s against dx^1 ^ dx^2 ^ dx^3
double wedge3(const Matrix& y, int p, int q, int s) {
  static const int perms[6][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {1, 0, 2}, {0, 2, 1}, {2, 1, 0}};
  double v = 0;
  for (int k = 0; k < 6; ++k) v += (k < 3 ? 1 : -1) * y(p, perms[k][0]) * y(q, perms[k][1]) * y(s, perms[k][2]);
  return v;
}

}  // namespace

ChernSimonsDensities chernSimonsDensities(const ChernSimonsData& D, const DiscretizedSection& phi, std::size_t node) {
  requireDims(phi.baseDim() == 3 && phi.fibreDim() == 0, "chernSimonsDensities: need r = 3 and m_u = 0");
  const int m = D.algebra.extent(0);
  requireDims(phi.kernelRank() == m, "chernSimonsDensities: algebra dimension mismatch");
  const Matrix y = phi.y(node);
  std::vector<Matrix> dy(3);  // dy[b](alpha, a) = d_b y_a^alpha
  for (int b = 0; b < 3; ++b)
    dy[b] = gridDerivative(phi.grid(), node, b, [&](std::size_t n) {
              return Vector(phi.yData().col(static_cast<Eigen::Index>(n)));
            }).reshaped(m, 3);

  // k A ^ dA, with (dA^beta)_{bc} = d_b y_c - d_c y_b
  double kAdA = 0;
  static const int cyc[3][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}};
  for (const auto& abc : cyc)
    for (int al = 0; al < m; ++al)
      for (int be = 0; be < m; ++be)
        kAdA += D.metric(al, be) * y(al, abc[0]) * (dy[abc[1]](be, abc[2]) - dy[abc[2]](be, abc[1]));

  double cubicConventional = 0;  // k_{alpha beta} C_{mu nu}^beta A^alpha ^ A^mu ^ A^nu
  double cubicCoupling = 0;      // k_{alpha mu} C_{beta gamma}^alpha A^mu ^ A^beta ^ A^gamma
  for (int al = 0; al < m; ++al)
    for (int be = 0; be < m; ++be)
      for (int mu = 0; mu < m; ++mu)
        for (int nu = 0; nu < m; ++nu) {
          cubicConventional += D.metric(al, be) * D.algebra(mu, nu, be) * wedge3(y, al, mu, nu);
          cubicCoupling += D.metric(al, be) * D.algebra(mu, nu, al) * wedge3(y, be, mu, nu);
        }

  const Array Cl = D.loweredConstants();
  double L = 0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c) L += Cl(a, b, c) * y(a, 0) * y(b, 1) * y(c, 2);

  return {kAdA + cubicConventional / 3, L, kAdA + cubicCoupling / 2};
}

double chernSimonsLagrangianDifference(const ChernSimonsData& D, const DiscretizedSection& phi, std::size_t node) {
  const ChernSimonsDensities d = chernSimonsDensities(D, phi, node);
  return std::abs(d.conventional + d.lagrangian - d.coupling);
}

// ------------------------------------------------------------------ Atiyah

FibredAlgebroidPair builderAtiyah(const AtiyahData& D) {
  const int m = D.algebra.rank() == 3 ? D.algebra.extent(0) : -1;
  requireDims(D.r >= 1 && m >= 0 && D.algebra.shape() == std::vector<int>{m, m, m},
              "builderAtiyah: algebra must be m x m x m");
  return FibredAlgebroidPair(D.r, 0, m, [D, m](const Vector& x, const Vector&) {
    FibredCoefficients c = FibredCoefficients::zero(D.r, 0, m);
    c.bracketVertical = D.algebra;
    if (D.curvature) {
      const Array Om = D.curvature(x);
      requireDims(Om.shape() == std::vector<int>{D.r, D.r, m}, "builderAtiyah: curvature must be r x r x m");
      for (int a = 0; a < D.r; ++a)
        for (int b = 0; b < D.r; ++b)
          for (int al = 0; al < m; ++al) c.bracketHorizontal(a, b, al) = -Om(a, b, al);
    }
    return c;
  });
}

}  // namespace algebroid
