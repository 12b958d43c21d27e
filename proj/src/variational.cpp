#include "algebroid/variational.hpp"

#include <stdexcept>

namespace algebroid {

namespace {

Vector stackJet(const JetPoint& p) {
  Vector z(p.x.size() + p.u.size() + p.y.size());
  z << p.x, p.u, p.y.reshaped();
  return z;
}

JetPoint unstackJet(const Vector& z, const JetIndex& J) {
  return {z.head(J.r), z.segment(J.r, J.mu), z.tail(J.mk * J.r).reshaped(J.mk, J.r)};
}

}  // namespace

Vector Lagrangian::gradientAt(const JetPoint& p) const {
  if (gradient) return gradient(p);
  const JetIndex J = jetIndex(p);
  const auto f = [&](const Vector& z) { return Vector::Constant(1, value(unstackJet(z, J))); };
  return centralJacobian<double>(f, stackJet(p), step).row(0).transpose();
}

Matrix Lagrangian::hessianAt(const JetPoint& p) const {
  if (hessian) return hessian(p);
  const JetIndex J = jetIndex(p);
  const auto g = [&](const Vector& z) { return gradientAt(unstackJet(z, J)); };
  const Matrix H = centralJacobian<double>(g, stackJet(p), step);
  return 0.5 * (H + H.transpose());
}

Matrix Lagrangian::momentum(const JetPoint& p) const {
  const JetIndex J = jetIndex(p);
  return gradientAt(p).tail(J.mk * J.r).reshaped(J.mk, J.r);
}

Vector Lagrangian::fibreGradient(const JetPoint& p) const {
  const JetIndex J = jetIndex(p);
  return gradientAt(p).segment(J.r, J.mu);
}

Lagrangian operator+(const Lagrangian& a, const Lagrangian& b) {
  Lagrangian s;
  s.step = std::min(a.step, b.step);
  s.value = [a, b](const JetPoint& p) { return a.value(p) + b.value(p); };
  s.gradient = [a, b](const JetPoint& p) { return (a.gradientAt(p) + b.gradientAt(p)).eval(); };
  if (a.hessian && b.hessian) s.hessian = [a, b](const JetPoint& p) { return (a.hessian(p) + b.hessian(p)).eval(); };
  return s;
}

void requireCoordinateBase(const FibredCoefficients& c) {
  requireDims(c.anchorBase.isIdentity(0.0) && c.bracketBase.maxAbs() == 0.0,
              "variational layer requires F = TN in a coordinate basis");
}

Vector elResidual(const FibredAlgebroidPair& FA, const Lagrangian& L, const DiscretizedSection& phi,
                  std::size_t node) {
  requireSectionShape(FA, phi);
  const int r = FA.baseDim();
  const int mk = FA.kernelRank();
  const JetPoint p = phi.jet(node);
  const FibredCoefficients c = FA.coefficients(p.x, p.u);
  requireCoordinateBase(c);
  const ZFunctions Z = zFunctions(c, p);
  const Matrix P = L.momentum(p);

  Vector res = -c.anchorVertical * L.fibreGradient(p);
  for (int a = 0; a < r; ++a) {
    res += gridDerivative(phi.grid(), node, a, [&](std::size_t m) { return Vector(L.momentum(phi.jet(m)).col(a)); });
    for (int al = 0; al < mk; ++al)
      for (int g = 0; g < mk; ++g) res(al) -= Z.kernel(a, al, g) * P(g, a);
  }
  return res;
}

namespace {

void requireVertical(const ProjectableSection& sigma) {
  if (!sigma.isVertical()) throw std::invalid_argument("section must be pi-vertical (sigma^a = 0)");
  if (!sigma.vertical) throw std::invalid_argument("section has no vertical components");
}

}  // namespace

Vector noetherCurrent(const FibredAlgebroidPair& FA, const Lagrangian& L, const ProjectableSection& sigma,
                      const JetPoint& p) {
  requireVertical(sigma);
  requireJetShape(FA, p);
  const Vector s = sigma.vertical(p.x, p.u);
  requireDims(s.size() == FA.kernelRank(), "noetherCurrent: section has wrong length");
  return L.momentum(p).transpose() * s;
}

Vector noetherCurrent(const FibredAlgebroidPair& FA, const Lagrangian& L, const ProjectableSection& sigma,
                      const DiscretizedSection& phi, std::size_t node) {
  return noetherCurrent(FA, L, sigma, phi.jet(node));
}

double invarianceDefect(const FibredAlgebroidPair& FA, const Lagrangian& L, const ProjectableSection& sigma,
                        const JetPoint& p) {
  requireVertical(sigma);
  const JetTangent t = completeLift(FA, sigma, p);
  const Vector g = L.gradientAt(p);
  const JetIndex J = jetIndex(p);
  return g.head(J.r).dot(t.dx) + g.segment(J.r, J.mu).dot(t.du) + g.tail(J.mk * J.r).dot(t.dy.reshaped());
}

double invarianceDefect(const FibredAlgebroidPair& FA, const Lagrangian& L, const ProjectableSection& sigma,
                        const DiscretizedSection& phi, std::size_t node) {
  return invarianceDefect(FA, L, sigma, phi.jet(node));
}

double firstVariationIdentityDefect(const FibredAlgebroidPair& FA, const Lagrangian& L,
                                    const ProjectableSection& sigma, const DiscretizedSection& phi,
                                    std::size_t node) {
  requireVertical(sigma);
  const JetPoint p = phi.jet(node);
  const double lift = invarianceDefect(FA, L, sigma, p);
  const double el = elResidual(FA, L, phi, node).dot(sigma.vertical(p.x, p.u));
  const double div =
      gridDivergence(phi.grid(), node, [&](std::size_t m) { return noetherCurrent(FA, L, sigma, phi.jet(m)); });
  return std::abs(lift + el - div);
}

}  // namespace algebroid
