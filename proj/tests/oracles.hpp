#pragma once

// Independent oracles shared by the unit tests and the acceptance binary.

#include "algebroid/scenarios.hpp"

#include <cmath>

namespace oracles {

using algebroid::DiscretizedSection;
using algebroid::Matrix;
using algebroid::Vector;

/// Classical Euler-Lagrange operator sum_a d_a(W_a^A y_a^A) - dL/du^A for
/// L = 1/2 sum W y^2 - V(u) on a periodic grid, coded directly: momenta by
/// hand, neighbours by index arithmetic, central differences.
inline Vector classicalEulerLagrange(const DiscretizedSection& phi, const Matrix& W,
                                     const std::function<Vector(const Vector&)>& dV, std::size_t node) {
  const auto& g = phi.grid();
  const int r = g.dim();
  std::vector<int> idx = g.multiIndex(node);
  Vector out = dV(phi.u(node));  // -dL/du = +V'(u)
  for (int a = 0; a < r; ++a) {
    const int n = g.extents[a];
    std::vector<int> plus = idx, minus = idx;
    plus[a] = (idx[a] + 1) % n;
    minus[a] = (idx[a] + n - 1) % n;
    const Vector pp = W.col(a).cwiseProduct(phi.y(g.linearIndex(plus)).col(a));
    const Vector pm = W.col(a).cwiseProduct(phi.y(g.linearIndex(minus)).col(a));
    out += (pp - pm) / (2 * g.spacing[a]);
  }
  return out;
}

/// Rigid-body energy 1/2 sum I y^2 and Casimir sum (I y)^2 in extended
/// precision on the compensated state y + yLow.
struct RigidBodyInvariants {
  long double energy = 0;
  long double casimir = 0;
};

inline RigidBodyInvariants rigidBodyInvariants(const Vector& inertia, const algebroid::MechanicsState& s) {
  RigidBodyInvariants out;
  for (Eigen::Index a = 0; a < inertia.size(); ++a) {
    long double y = s.y(a);
    if (s.yLow.size() == s.y.size()) y += s.yLow(a);
    const long double I = inertia(a);
    out.energy += I * y * y / 2;
    out.casimir += I * I * y * y;
  }
  return out;
}

/// Maximum relative drift of both invariants along a trajectory.
inline std::pair<double, double> rigidBodyDrift(const Vector& inertia, const algebroid::MechanicsTrajectory& traj) {
  const RigidBodyInvariants i0 = rigidBodyInvariants(inertia, traj.states.front());
  long double dE = 0, dC = 0;
  for (const auto& s : traj.states) {
    const RigidBodyInvariants i = rigidBodyInvariants(inertia, s);
    dE = std::max(dE, std::fabs(i.energy - i0.energy) / i0.energy);
    dC = std::max(dC, std::fabs(i.casimir - i0.casimir) / i0.casimir);
  }
  return {static_cast<double>(dE), static_cast<double>(dC)};
}

/// Bound on the Chern-Simons Euler-Lagrange residual by the morphism residual:
/// delta L_alpha is a sum over the three base pairs of C_{alpha beta gamma}
/// times a morphism block times a component of y, so
/// kappa = 3 max_alpha sum_{beta gamma} |C_{alpha beta gamma}| max |y|.
inline double chernSimonsKappa(const algebroid::ChernSimonsData& D, const DiscretizedSection& phi) {
  const algebroid::Array Cl = D.loweredConstants();
  const int m = Cl.extent(0);
  double cmax = 0;
  for (int a = 0; a < m; ++a) {
    double s = 0;
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c) s += std::abs(Cl(a, b, c));
    cmax = std::max(cmax, s);
  }
  return 3 * cmax * phi.yData().cwiseAbs().maxCoeff();
}

}  // namespace oracles
