#pragma once

// Fibred Lie algebroid pairs pi: E -> F over nu: M -> N in an adapted basis
// {e_a, e_alpha}, and the jet-bundle machinery built on them.
//
// Coordinates: x in R^r on N, (x, u) with u in R^{m_u} on M, and jet
// coordinates y(alpha, a) = y_a^alpha stored as an m_k x r matrix.

#include "algebroid/algebroid.hpp"

#include <functional>

namespace algebroid {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Array = DenseArray<double>;
using Algebroid = LieAlgebroidModel<double>;
using Section = SectionOfE<double>;
using Form = PForm<double>;

/// Structure functions of a fibred pair at one point (x, u).
///
/// The bracket table has no e_c component in [e_a, e_beta] or
/// [e_alpha, e_beta]; those blocks simply do not exist here, so the
/// projection onto F is a morphism by construction.
struct FibredCoefficients {
  Matrix anchorBase;        ///< (a, i) = rho_a^i, depends on x only
  Array bracketBase;        ///< (b, c, a) = C_{bc}^a, depends on x only
  Matrix anchorHorizontal;  ///< (a, A) = rho_a^A
  Matrix anchorVertical;    ///< (alpha, A) = rho_alpha^A
  Array bracketHorizontal;  ///< (a, b, gamma) = C_{ab}^gamma
  Array bracketMixed;       ///< (a, beta, gamma) = C_{a beta}^gamma
  Array bracketVertical;    ///< (alpha, beta, gamma) = C_{alpha beta}^gamma

  /// Coordinate basis on F = TN with every other block zero.
  static FibredCoefficients zero(int r, int mu, int mk);
};

class FibredAlgebroidPair {
 public:
  using CoefficientFn = std::function<FibredCoefficients(const Vector& x, const Vector& u)>;

  FibredAlgebroidPair(int baseDim, int fibreDim, int kernelRank, CoefficientFn fn);

  int baseDim() const { return r_; }
  int fibreDim() const { return mu_; }
  int kernelRank() const { return mk_; }
  double step() const { return step_; }
  FibredAlgebroidPair& setStep(double h);

  /// Validated coefficients with the paired lower indices antisymmetrized.
  FibredCoefficients coefficients(const Vector& x, const Vector& u) const;

  /// E as a Lie algebroid of rank r + m_k over M with coordinates (x, u);
  /// basis order (e_a, e_alpha).
  Algebroid totalAlgebroid() const;
  /// F as a Lie algebroid of rank r over N.
  Algebroid baseAlgebroid() const;

 private:
  int r_;
  int mu_;
  int mk_;
  CoefficientFn fn_;
  double step_ = Algebroid::kDefaultStep;
};

/// A point of the jet bundle.
struct JetPoint {
  Vector x;
  Vector u;
  Matrix y;  ///< (alpha, a) = y_a^alpha

  bool allFinite() const { return x.allFinite() && u.allFinite() && y.allFinite(); }
  /// (x, u) stacked, the coordinates of the underlying point of M.
  Vector basePoint() const;
};

/// A section of L*pi: theta = (theta_b^c e^b + theta_alpha^c e^alpha) (x) ebar_c.
struct AffineDualSection {
  struct Value {
    Matrix base;    ///< (b, c) = theta_b^c
    Matrix kernel;  ///< (alpha, c) = theta_alpha^c
  };
  std::function<Value(const Vector& x, const Vector& u)> coeffs;
};

/// A scalar function f(x, u) on M with optional analytic gradient.
struct FibreFunction {
  struct Gradient {
    Vector dx;
    Vector du;
  };
  std::function<double(const Vector&, const Vector&)> value;
  std::function<Gradient(const Vector&, const Vector&)> gradient;

  Gradient gradientAt(const Vector& x, const Vector& u, double h) const;
};

/// sigma = sigma^a(x) e_a + sigma^alpha(x, u) e_alpha.
struct ProjectableSection {
  std::function<Vector(const Vector& x)> base;  ///< sigma^a, empty means zero (pi-vertical)
  std::function<Matrix(const Vector& x)> baseJacobian;  ///< (a, i)
  std::function<Vector(const Vector& x, const Vector& u)> vertical;  ///< sigma^alpha
  /// Optional analytic derivatives of sigma^alpha: (alpha, i) and (alpha, A).
  std::function<std::pair<Matrix, Matrix>(const Vector& x, const Vector& u)> verticalJacobian;

  bool isVertical() const { return !base; }
  Vector baseAt(const Vector& x, int r) const;
  Matrix baseJacobianAt(const Vector& x, int r, double h) const;
  std::pair<Matrix, Matrix> verticalJacobianAt(const Vector& x, const Vector& u, double h) const;

  /// A pi-vertical section with the given components.
  static ProjectableSection verticalSection(std::function<Vector(const Vector&, const Vector&)> v);
};

/// Tangent vector on the jet bundle.
struct JetTangent {
  Vector dx;
  Vector du;
  Matrix dy;  ///< (alpha, a)
};

/// Z_{a gamma}^alpha and Z_{ac}^alpha at a jet point.
struct ZFunctions {
  Array kernel;  ///< (a, gamma, alpha) = Z_{a gamma}^alpha
  Array base;    ///< (a, c, alpha) = Z_{ac}^alpha
};

/// theta_a^a + theta_alpha^a y_a^alpha.
double affineEval(const AffineDualSection& theta, const JetPoint& p);

/// f_{|a} = rho_a^i df/dx^i + (rho_a^A + rho_alpha^A y_a^alpha) df/du^A.
double totalDerivative(const FibredAlgebroidPair& FA, const FibreFunction& f, const JetPoint& p, int a);

/// Total derivative along the jet point of a function whose gradient is known.
double totalDerivative(const FibredCoefficients& c, const FibreFunction::Gradient& g, const JetPoint& p, int a);

ZFunctions zFunctions(const FibredAlgebroidPair& FA, const JetPoint& p);
ZFunctions zFunctions(const FibredCoefficients& c, const JetPoint& p);

/// Components of the complete lift of a projectable section at p.
JetTangent completeLift(const FibredAlgebroidPair& FA, const ProjectableSection& sigma, const JetPoint& p);

/// Derivative of the affine function of theta along the complete lift of
/// sigma at p; by the characterization of complete lifts this is the affine
/// function of d_sigma theta.
double lieDerivativeAffine(const FibredAlgebroidPair& FA, const ProjectableSection& sigma,
                           const AffineDualSection& theta, const JetPoint& p);

void requireJetShape(const FibredAlgebroidPair& FA, const JetPoint& p);

}  // namespace algebroid
