#include "algebroid/fibred_jet.hpp"

#include <stdexcept>
#include <utility>

namespace algebroid {

namespace {

void antisymmetrizePair(Array& c) {
  const int n = c.extent(0);
  const int m = c.extent(2);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b)
      for (int g = 0; g < m; ++g) {
        const double v = 0.5 * (c(a, b, g) - c(b, a, g));
        c(a, b, g) = v;
        c(b, a, g) = -v;
      }
}

Vector stack(const Vector& x, const Vector& u) {
  Vector z(x.size() + u.size());
  z << x, u;
  return z;
}

}  // namespace

FibredCoefficients FibredCoefficients::zero(int r, int mu, int mk) {
  FibredCoefficients c;
  c.anchorBase = Matrix::Identity(r, r);
  c.bracketBase = Array({r, r, r});
  c.anchorHorizontal = Matrix::Zero(r, mu);
  c.anchorVertical = Matrix::Zero(mk, mu);
  c.bracketHorizontal = Array({r, r, mk});
  c.bracketMixed = Array({r, mk, mk});
  c.bracketVertical = Array({mk, mk, mk});
  return c;
}

FibredAlgebroidPair::FibredAlgebroidPair(int baseDim, int fibreDim, int kernelRank, CoefficientFn fn)
    : r_(baseDim), mu_(fibreDim), mk_(kernelRank), fn_(std::move(fn)) {
  requireDims(r_ >= 1 && mu_ >= 0 && mk_ >= 0, "FibredAlgebroidPair: invalid dimensions");
  requireDims(static_cast<bool>(fn_), "FibredAlgebroidPair: coefficient callback required");
}

FibredAlgebroidPair& FibredAlgebroidPair::setStep(double h) {
  if (!(h > 0)) throw std::invalid_argument("FibredAlgebroidPair: step must be positive");
  step_ = h;
  return *this;
}

FibredCoefficients FibredAlgebroidPair::coefficients(const Vector& x, const Vector& u) const {
  requireDims(x.size() == r_ && u.size() == mu_, "FibredAlgebroidPair: point has wrong dimension");
  FibredCoefficients c = fn_(x, u);
  requireDims(c.anchorBase.rows() == r_ && c.anchorBase.cols() == r_, "anchorBase must be r x r");
  requireDims(c.bracketBase.shape() == std::vector<int>{r_, r_, r_}, "bracketBase must be r x r x r");
  requireDims(c.anchorHorizontal.rows() == r_ && c.anchorHorizontal.cols() == mu_, "anchorHorizontal must be r x m_u");
  requireDims(c.anchorVertical.rows() == mk_ && c.anchorVertical.cols() == mu_, "anchorVertical must be m_k x m_u");
  requireDims(c.bracketHorizontal.shape() == std::vector<int>{r_, r_, mk_}, "bracketHorizontal must be r x r x m_k");
  requireDims(c.bracketMixed.shape() == std::vector<int>{r_, mk_, mk_}, "bracketMixed must be r x m_k x m_k");
  requireDims(c.bracketVertical.shape() == std::vector<int>{mk_, mk_, mk_}, "bracketVertical must be m_k^3");
  antisymmetrizePair(c.bracketBase);
  antisymmetrizePair(c.bracketHorizontal);
  antisymmetrizePair(c.bracketVertical);
  return c;
}

Algebroid FibredAlgebroidPair::totalAlgebroid() const {
  const int r = r_, mu = mu_, mk = mk_;
  const int n = r + mu;
  const int k = r + mk;
  FibredAlgebroidPair self = *this;
  auto anchor = [self, r, mu, mk, n, k](const Vector& z) {
    const FibredCoefficients c = self.coefficients(z.head(r), z.tail(mu));
    Matrix rho = Matrix::Zero(k, n);
    rho.topLeftCorner(r, r) = c.anchorBase;
    rho.topRightCorner(r, mu) = c.anchorHorizontal;
    rho.bottomRightCorner(mk, mu) = c.anchorVertical;
    return rho;
  };
  auto bracket = [self, r, mu, mk, k](const Vector& z) {
    const FibredCoefficients c = self.coefficients(z.head(r), z.tail(mu));
    Array C = Array::cube(3, k);
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b) {
        for (int d = 0; d < r; ++d) C(a, b, d) = c.bracketBase(a, b, d);
        for (int g = 0; g < mk; ++g) C(a, b, r + g) = c.bracketHorizontal(a, b, g);
      }
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < mk; ++b)
        for (int g = 0; g < mk; ++g) {
          C(a, r + b, r + g) = c.bracketMixed(a, b, g);
          C(r + b, a, r + g) = -c.bracketMixed(a, b, g);
        }
    for (int a = 0; a < mk; ++a)
      for (int b = 0; b < mk; ++b)
        for (int g = 0; g < mk; ++g) C(r + a, r + b, r + g) = c.bracketVertical(a, b, g);
    return C;
  };
  Algebroid A(n, k, anchor, bracket);
  A.setStep(step_);
  return A;
}

Algebroid FibredAlgebroidPair::baseAlgebroid() const {
  const int r = r_;
  FibredAlgebroidPair self = *this;
  const Vector u0 = Vector::Zero(mu_);
  Algebroid A(
      r, r, [self, u0](const Vector& x) { return self.coefficients(x, u0).anchorBase; },
      [self, u0](const Vector& x) { return self.coefficients(x, u0).bracketBase; });
  A.setStep(step_);
  return A;
}

Vector JetPoint::basePoint() const { return stack(x, u); }

FibreFunction::Gradient FibreFunction::gradientAt(const Vector& x, const Vector& u, double h) const {
  if (gradient) return gradient(x, u);
  Gradient g{Vector(x.size()), Vector(u.size())};
  Vector xp = x, up = u;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    const double fp = value(xp, u);
    xp(i) = x(i) - h;
    const double fm = value(xp, u);
    xp(i) = x(i);
    g.dx(i) = (fp - fm) / (2 * h);
  }
  for (Eigen::Index A = 0; A < u.size(); ++A) {
    up(A) = u(A) + h;
    const double fp = value(x, up);
    up(A) = u(A) - h;
    const double fm = value(x, up);
    up(A) = u(A);
    g.du(A) = (fp - fm) / (2 * h);
  }
  return g;
}

Vector ProjectableSection::baseAt(const Vector& x, int r) const {
  if (!base) return Vector::Zero(r);
  return base(x);
}

Matrix ProjectableSection::baseJacobianAt(const Vector& x, int r, double h) const {
  if (!base) return Matrix::Zero(r, x.size());
  if (baseJacobian) return baseJacobian(x);
  return centralJacobian<double>(base, x, h);
}

std::pair<Matrix, Matrix> ProjectableSection::verticalJacobianAt(const Vector& x, const Vector& u, double h) const {
  if (verticalJacobian) return verticalJacobian(x, u);
  const Matrix jx = centralJacobian<double>([&](const Vector& xx) { return vertical(xx, u); }, x, h);
  const Matrix ju = centralJacobian<double>([&](const Vector& uu) { return vertical(x, uu); }, u, h);
  return {jx, ju};
}

ProjectableSection ProjectableSection::verticalSection(std::function<Vector(const Vector&, const Vector&)> v) {
  ProjectableSection s;
  s.vertical = std::move(v);
  return s;
}

void requireJetShape(const FibredAlgebroidPair& FA, const JetPoint& p) {
  requireDims(p.x.size() == FA.baseDim() && p.u.size() == FA.fibreDim() && p.y.rows() == FA.kernelRank() &&
                  p.y.cols() == FA.baseDim(),
              "JetPoint shape does not match the fibred pair");
}

double affineEval(const AffineDualSection& theta, const JetPoint& p) {
  const AffineDualSection::Value v = theta.coeffs(p.x, p.u);
  requireDims(v.base.rows() == v.base.cols() && v.base.rows() == p.y.cols(), "affineEval: base block shape");
  requireDims(v.kernel.rows() == p.y.rows() && v.kernel.cols() == p.y.cols(), "affineEval: kernel block shape");
  return v.base.trace() + v.kernel.cwiseProduct(p.y).sum();
}

double totalDerivative(const FibredCoefficients& c, const FibreFunction::Gradient& g, const JetPoint& p, int a) {
  const Vector uRate = c.anchorHorizontal.row(a).transpose() + c.anchorVertical.transpose() * p.y.col(a);
  return c.anchorBase.row(a).dot(g.dx) + uRate.dot(g.du);
}

double totalDerivative(const FibredAlgebroidPair& FA, const FibreFunction& f, const JetPoint& p, int a) {
  requireJetShape(FA, p);
  requireDims(a >= 0 && a < FA.baseDim(), "totalDerivative: index out of range");
  return totalDerivative(FA.coefficients(p.x, p.u), f.gradientAt(p.x, p.u, FA.step()), p, a);
}

ZFunctions zFunctions(const FibredCoefficients& c, const JetPoint& p) {
  const int r = static_cast<int>(p.y.cols());
  const int mk = static_cast<int>(p.y.rows());
  ZFunctions z{Array({r, mk, mk}), Array({r, r, mk})};
  for (int a = 0; a < r; ++a)
    for (int al = 0; al < mk; ++al) {
      for (int g = 0; g < mk; ++g) {
        double acc = c.bracketMixed(a, g, al);
        for (int b = 0; b < mk; ++b) acc += c.bracketVertical(b, g, al) * p.y(b, a);
        z.kernel(a, g, al) = acc;
      }
      for (int cc = 0; cc < r; ++cc) {
        // C_{beta c}^alpha = -C_{c beta}^alpha
        double acc = c.bracketHorizontal(a, cc, al);
        for (int b = 0; b < mk; ++b) acc -= c.bracketMixed(cc, b, al) * p.y(b, a);
        z.base(a, cc, al) = acc;
      }
    }
  return z;
}

ZFunctions zFunctions(const FibredAlgebroidPair& FA, const JetPoint& p) {
  requireJetShape(FA, p);
  return zFunctions(FA.coefficients(p.x, p.u), p);
}

JetTangent completeLift(const FibredAlgebroidPair& FA, const ProjectableSection& sigma, const JetPoint& p) {
  requireJetShape(FA, p);
  const int r = FA.baseDim();
  const int mk = FA.kernelRank();
  const double h = FA.step();
  const FibredCoefficients c = FA.coefficients(p.x, p.u);
  const ZFunctions Z = zFunctions(c, p);

  const Vector sb = sigma.baseAt(p.x, r);
  const Matrix dsb = sigma.baseJacobianAt(p.x, r, h);  // (b, i)
  const Vector sv = sigma.vertical ? sigma.vertical(p.x, p.u) : Vector::Zero(mk);
  requireDims(sb.size() == r && sv.size() == mk, "completeLift: section has wrong dimension");
  std::pair<Matrix, Matrix> dsv{Matrix::Zero(mk, r), Matrix::Zero(mk, FA.fibreDim())};
  if (sigma.vertical) dsv = sigma.verticalJacobianAt(p.x, p.u, h);

  JetTangent t;
  t.dx = c.anchorBase.transpose() * sb;
  t.du = c.anchorHorizontal.transpose() * sb + c.anchorVertical.transpose() * sv;
  t.dy = Matrix::Zero(mk, r);

  // sigma^b_{|a} = rho_a^i d_i sigma^b, an r x r matrix (a, b)
  const Matrix baseRate = c.anchorBase * dsb.transpose();
  for (int a = 0; a < r; ++a) {
    const Vector uRate = c.anchorHorizontal.row(a).transpose() + c.anchorVertical.transpose() * p.y.col(a);
    const Vector svRate = dsv.first * c.anchorBase.row(a).transpose() + dsv.second * uRate;  // sigma^alpha_{|a}
    Vector shift(r);  // sigma^b_{|a} + sigma^c C_{ac}^b
    for (int b = 0; b < r; ++b) {
      double acc = baseRate(a, b);
      for (int cc = 0; cc < r; ++cc) acc += sb(cc) * c.bracketBase(a, cc, b);
      shift(b) = acc;
    }
    for (int al = 0; al < mk; ++al) {
      double acc = svRate(al);
      for (int b = 0; b < r; ++b) acc += Z.base(a, b, al) * sb(b);
      for (int be = 0; be < mk; ++be) acc += Z.kernel(a, be, al) * sv(be);
      acc -= p.y.row(al).dot(shift);
      t.dy(al, a) = acc;
    }
  }
  return t;
}

double lieDerivativeAffine(const FibredAlgebroidPair& FA, const ProjectableSection& sigma,
                           const AffineDualSection& theta, const JetPoint& p) {
  const JetTangent t = completeLift(FA, sigma, p);
  const double h = FA.step();
  double acc = 0;
  JetPoint q = p;
  for (Eigen::Index i = 0; i < p.x.size(); ++i) {
    if (t.dx(i) == 0) continue;
    q.x(i) = p.x(i) + h;
    const double fp = affineEval(theta, q);
    q.x(i) = p.x(i) - h;
    const double fm = affineEval(theta, q);
    q.x(i) = p.x(i);
    acc += t.dx(i) * (fp - fm) / (2 * h);
  }
  for (Eigen::Index A = 0; A < p.u.size(); ++A) {
    if (t.du(A) == 0) continue;
    q.u(A) = p.u(A) + h;
    const double fp = affineEval(theta, q);
    q.u(A) = p.u(A) - h;
    const double fm = affineEval(theta, q);
    q.u(A) = p.u(A);
    acc += t.du(A) * (fp - fm) / (2 * h);
  }
  // affine functions are linear in y
  acc += theta.coeffs(p.x, p.u).kernel.cwiseProduct(t.dy).sum();
  return acc;
}

}  // namespace algebroid
