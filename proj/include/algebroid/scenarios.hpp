#pragma once

// Builders for concrete fibred pairs (standard field theory, time-dependent
// mechanics, Chern-Simons, Atiyah/Euler-Poincare), a Lagrangian catalog, the
// RK4 integrator for r = 1, and pure-gauge field generation.

#include "algebroid/variational.hpp"

#include <complex>
#include <cstdint>
#include <vector>

namespace algebroid {

// ---------------------------------------------------------------- standard

/// Nonlinear connection Gamma_i^A(x, u) on nu: M = N x R^{m_u} -> N. The
/// horizontal frame is e_i = d/dx^i + Gamma_i^A d/du^A, e_A = d/du^A.
struct StandardCaseData {
  int r = 1;
  int mu = 1;
  std::function<Matrix(const Vector& x, const Vector& u)> connection;  ///< (i, A)
  std::function<Array(const Vector& x, const Vector& u)> connectionDx;  ///< optional (i, A, j) = d_j Gamma_i^A
  std::function<Array(const Vector& x, const Vector& u)> connectionDu;  ///< optional (i, A, B) = dGamma_i^A/du^B
  double step = 1e-4;

  Array gammaDx(const Vector& x, const Vector& u) const;
  Array gammaDu(const Vector& x, const Vector& u) const;
  /// (i, j, A) = R_{ij}^A with [e_i, e_j] = -R_{ij}^A e_A.
  Array curvature(const Vector& x, const Vector& u) const;
};

/// Gamma_i^A(x, u) from a seeded Fourier field on R^{r + m_u}, with analytic
/// first derivatives; generically curved.
StandardCaseData fourierConnection(int r, int mu, std::uint64_t seed, double amplitude = 0.5);

/// rho_j^i = delta, rho_i^A = Gamma_i^A, rho_B^A = delta,
/// C_{ij}^A = -R_{ij}^A, C_{iB}^A = -dGamma_i^A/du^B, C_{AB} = 0.
FibredAlgebroidPair builderStandard(const StandardCaseData& D);

// ------------------------------------------------------- mechanics (r = 1)

/// Structure data over M = R x R^{m_u} with e_0 = d/dt + rho_0^A d/du^A.
/// Empty callbacks mean zero.
struct TimeDependentData {
  int mu = 0;
  int mk = 0;
  Array algebra;  ///< (alpha, beta, gamma) = C_{alpha beta}^gamma, constant
  std::function<Vector(double t, const Vector& u)> rho0;  ///< rho_0^A
  std::function<Matrix(double t, const Vector& u)> rhoV;  ///< (alpha, A) = rho_alpha^A
  std::function<Matrix(double t, const Vector& u)> c0;    ///< (alpha, gamma) = C_{0 alpha}^gamma
};

FibredAlgebroidPair builderTimeDependent(const TimeDependentData& D);

/// so(3), no u coordinates.
TimeDependentData rigidBodyData();
/// so(3) acting on u in R^3 by rho_alpha^A = eps_{alpha A B} u^B, so that
/// du/dt = u x y (the body-frame gravity direction is advected).
TimeDependentData heavyTopData();
/// Abelian R^m acting on u in R^m by translations.
TimeDependentData freeParticleData(int m);

struct MechanicsState {
  double t = 0;
  Vector u;
  Vector y;
  /// Low-order parts kept by the integrator's compensated summation: the
  /// integrated state is u + uLow, y + yLow to well beyond working precision.
  /// Empty for states not produced by integrateMechanics.
  Vector uLow;
  Vector yLow;
};

struct MechanicsTrajectory {
  std::vector<MechanicsState> states;
  /// max_alpha |delta L_alpha| at each state, with dP/dt from a five-point
  /// stencil on the produced samples; zero at the two nodes nearest each end.
  std::vector<double> elResidual;
};

class SingularHessian : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Right-hand side (du/dt, dy/dt) of the Euler-Lagrange system at a state.
std::pair<Vector, Vector> mechanicsRate(const FibredAlgebroidPair& FA, const Lagrangian& L, const MechanicsState& s);

/// Classical RK4, increments accumulated by Neumaier summation. The Hessian
/// d^2L/dy dy is solved by a full-pivot LU after a condition check (SingularHessian when the condition number exceeds
/// 1e12); FlowBlowUp on non-finite state. The step count is
/// round(tEnd / dt) and the last step lands on tEnd exactly.
MechanicsTrajectory integrateMechanics(const FibredAlgebroidPair& FA, const Lagrangian& L, const MechanicsState& s0,
                                       double tEnd, double dt);

JetPoint mechanicsJet(const MechanicsState& s);
/// Energy P_alpha y^alpha - L for a time-independent Lagrangian.
double mechanicsEnergy(const Lagrangian& L, const MechanicsState& s);

/// The trajectory as a one-dimensional section with one-sided boundaries.
DiscretizedSection trajectorySection(const MechanicsTrajectory& traj);

// ------------------------------------------------------------- Lagrangians

/// V(u) with derivatives.
struct Potential {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;
  static Potential zero();
  static Potential linear(const Vector& c);      ///< c . u
  static Potential harmonic(double massSq);      ///< massSq |u|^2 / 2
};

/// L = 1/2 sum_{alpha, a} W(alpha, a) (y_a^alpha)^2 - V(u), analytic partials.
Lagrangian quadraticLagrangian(const Matrix& weights, int mu, const Potential& V = Potential::zero());

// ------------------------------------------------------------ Chern-Simons

struct ChernSimonsData {
  Array algebra;  ///< C_{beta gamma}^alpha stored as (beta, gamma, alpha)
  Matrix metric;  ///< k_{alpha beta}

  /// (alpha, beta, gamma) = k_{alpha mu} C_{beta gamma}^mu.
  Array loweredConstants() const;
  /// Throws std::invalid_argument unless k is symmetric and nondegenerate
  /// and the lowered constants are totally skew within 1e-12.
  void validate() const;
};

/// TN x g over a 3-dimensional N (m_u = 0), with L = C_{abc} y_1^a y_2^b y_3^c.
std::pair<FibredAlgebroidPair, Lagrangian> builderChernSimons(const ChernSimonsData& D);

using CMatrix = Eigen::MatrixXcd;

/// Matrix-valued gauge function with optional analytic derivatives.
struct MatrixGauge {
  std::function<CMatrix(const Vector& x)> element;
  std::function<std::vector<CMatrix>(const Vector& x)> derivative;  ///< d_a g, optional
  double step = 1e-3;  ///< for the five-point fallback

  std::vector<CMatrix> derivativeAt(const Vector& x) const;
};

class ProjectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least-squares coordinates of a matrix in the real span of `basis`; throws
/// ProjectionError when the residual exceeds tol * max(1, |A|).
Vector projectOntoBasis(const CMatrix& A, const std::vector<CMatrix>& basis, double tol = 1e-8);

/// y_a^alpha from A_a = g^{-1} d_a g at each node (m_u = 0).
DiscretizedSection flatConnectionGenerator(const MatrixGauge& gauge, const std::vector<CMatrix>& basis,
                                           const GridSpec& grid, double tol = 1e-8);

/// tau_alpha = -(i/2) sigma_alpha, so [tau_alpha, tau_beta] = eps_{alpha beta gamma} tau_gamma.
std::vector<CMatrix> su2Basis();
/// exp(sum_alpha f^alpha tau_alpha) in closed form.
CMatrix su2Exp(const Vector& f);
/// g(x) = exp(f(x) . tau) with f a seeded periodic Fourier field on R^3.
MatrixGauge su2FourierGauge(std::uint64_t seed, double amplitude = 1.0);

/// Top-degree coefficients (against dx^1 ^ dx^2 ^ dx^3) at a node, with dA
/// from the grid derivative:
///   conventional = k A ^ dA + 1/3 k C A ^ A ^ A
///   coupling     = k A ^ (dA + 1/2 C A ^ A)
///   lagrangian   = L.
/// Since 1/3 k C A^A^A = 2L and 1/2 k C A^A^A = 3L, the identity that holds
/// is conventional + lagrangian = coupling.
struct ChernSimonsDensities {
  double conventional = 0;
  double lagrangian = 0;
  double coupling = 0;
};

ChernSimonsDensities chernSimonsDensities(const ChernSimonsData& D, const DiscretizedSection& phi, std::size_t node);

/// |conventional + lagrangian - coupling| at a node.
double chernSimonsLagrangianDifference(const ChernSimonsData& D, const DiscretizedSection& phi, std::size_t node);

// ------------------------------------------------------------------ Atiyah

struct AtiyahData {
  int r = 1;
  Array algebra;  ///< C_{alpha beta}^gamma of g
  std::function<Array(const Vector& x)> curvature;  ///< (a, b, alpha) = Omega_{ab}^alpha, empty means flat
};

/// m_u = 0, C_{ab}^alpha = -Omega_{ab}^alpha, C_{a beta} = 0, kernel brackets from g.
/// The result is a Lie algebroid only when Omega is closed and central in g.
FibredAlgebroidPair builderAtiyah(const AtiyahData& D);

}  // namespace algebroid
