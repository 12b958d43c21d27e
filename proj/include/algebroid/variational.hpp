#pragma once

// Euler-Lagrange residuals, Noether currents and the pointwise first
// variation identity for Lagrangians on the jet bundle, with F = TN in its
// coordinate basis and omega = dx^1 ^ ... ^ dx^r.

#include "algebroid/fields.hpp"

namespace algebroid {

/// Scalar function on the jet bundle. Partials are taken with respect to the
/// stacked coordinates z = (x, u, vec y), where vec y puts y_a^alpha at
/// position alpha + m_k a (see jetIndex).
struct Lagrangian {
  std::function<double(const JetPoint&)> value;
  std::function<Vector(const JetPoint&)> gradient;  ///< optional, length dim z
  std::function<Matrix(const JetPoint&)> hessian;   ///< optional, dim z square
  double step = 1e-4;                                ///< finite-difference fallback

  Vector gradientAt(const JetPoint& p) const;
  Matrix hessianAt(const JetPoint& p) const;

  /// (alpha, a) = dL/dy_a^alpha
  Matrix momentum(const JetPoint& p) const;
  /// dL/du^A
  Vector fibreGradient(const JetPoint& p) const;
};

struct JetIndex {
  int r;
  int mu;
  int mk;
  int size() const { return r + mu + mk * r; }
  int x(int i) const { return i; }
  int u(int A) const { return r + A; }
  int y(int alpha, int a) const { return r + mu + alpha + mk * a; }
};

inline JetIndex jetIndex(const JetPoint& p) {
  return {static_cast<int>(p.x.size()), static_cast<int>(p.u.size()), static_cast<int>(p.y.rows())};
}

/// Pointwise sum of two Lagrangians with the summed partials.
Lagrangian operator+(const Lagrangian& a, const Lagrangian& b);

/// delta L_alpha = d/dx^a (dL/dy_a^alpha o Phi) - Z_{a alpha}^gamma dL/dy_a^gamma
///                 - rho_alpha^A dL/du^A,
/// with d/dx^a the grid derivative of the momentum sampled at neighbour nodes.
Vector elResidual(const FibredAlgebroidPair& FA, const Lagrangian& L, const DiscretizedSection& phi,
                  std::size_t node);

/// J^a = sigma^alpha dL/dy_a^alpha; sigma must be pi-vertical.
Vector noetherCurrent(const FibredAlgebroidPair& FA, const Lagrangian& L, const ProjectableSection& sigma,
                      const JetPoint& p);
Vector noetherCurrent(const FibredAlgebroidPair& FA, const Lagrangian& L, const ProjectableSection& sigma,
                      const DiscretizedSection& phi, std::size_t node);

/// Derivative of L along the complete lift of sigma.
double invarianceDefect(const FibredAlgebroidPair& FA, const Lagrangian& L, const ProjectableSection& sigma,
                        const JetPoint& p);
double invarianceDefect(const FibredAlgebroidPair& FA, const Lagrangian& L, const ProjectableSection& sigma,
                        const DiscretizedSection& phi, std::size_t node);

/// |X(L) + delta L_alpha sigma^alpha - div_h J| at a node. The identity behind
/// it, X(L) = div J - delta L_alpha sigma^alpha, holds for every admissible
/// field, so this is a pure discretization error.
double firstVariationIdentityDefect(const FibredAlgebroidPair& FA, const Lagrangian& L,
                                    const ProjectableSection& sigma, const DiscretizedSection& phi,
                                    std::size_t node);

/// Throws DimensionError unless F is TN in a coordinate basis at p.
void requireCoordinateBase(const FibredCoefficients& c);

}  // namespace algebroid
