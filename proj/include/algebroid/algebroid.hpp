#pragma once

// Lie algebroids in a single chart: structure functions, Cartan calculus and
// flows of sections.
//
// Index conventions: anchor(x) is the k x n matrix rho(alpha, i); the bracket
// tensor C(alpha, beta, gamma) holds C_{alpha beta}^gamma, i.e. the bracket
// [e_alpha, e_beta] = C_{alpha beta}^gamma e_gamma. Spatial derivatives are
// always appended as the trailing index.

#include "algebroid/dense_array.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace algebroid {

/// Raised when a flow integration produces non-finite values.
class FlowBlowUp : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
class LieAlgebroidModel {
 public:
  using Point = Vec<Scalar>;
  using AnchorFn = std::function<Mat<Scalar>(const Point&)>;
  using TensorFn = std::function<DenseArray<Scalar>(const Point&)>;

  static constexpr double kDefaultStep = 1e-4;

  LieAlgebroidModel(int baseDim, int rank, AnchorFn anchor, TensorFn bracket)
      : baseDim_(baseDim), rank_(rank), anchor_(std::move(anchor)), bracket_(std::move(bracket)) {
    requireDims(baseDim >= 0 && rank >= 0, "LieAlgebroidModel: negative dimension");
    requireDims(static_cast<bool>(anchor_) && static_cast<bool>(bracket_),
                "LieAlgebroidModel: anchor and bracket callbacks are required");
  }

  /// Analytic d_j rho_alpha^i, shape (k, n, n).
  LieAlgebroidModel& setAnchorGradient(TensorFn fn) {
    anchorGradient_ = std::move(fn);
    return *this;
  }
  /// Analytic d_j C_{alpha beta}^gamma, shape (k, k, k, n).
  LieAlgebroidModel& setBracketGradient(TensorFn fn) {
    bracketGradient_ = std::move(fn);
    return *this;
  }
  LieAlgebroidModel& setStep(Scalar h) {
    if (!(h > Scalar(0))) throw std::invalid_argument("LieAlgebroidModel: step must be positive");
    step_ = h;
    return *this;
  }

  int baseDim() const { return baseDim_; }
  int rank() const { return rank_; }
  Scalar step() const { return step_; }
  bool hasAnalyticDerivatives() const { return anchorGradient_ && bracketGradient_; }

  Mat<Scalar> anchor(const Point& x) const {
    checkPoint(x);
    Mat<Scalar> rho = anchor_(x);
    requireDims(rho.rows() == rank_ && rho.cols() == baseDim_, "anchor callback returned wrong shape");
    return rho;
  }

  /// Structure functions at x, antisymmetrized in the lower pair. For input
  /// that is already antisymmetric the values are returned bit-for-bit.
  DenseArray<Scalar> bracketCoefficients(const Point& x) const {
    checkPoint(x);
    return antisymmetrize(bracket_(x));
  }

  DenseArray<Scalar> anchorGradient(const Point& x) const {
    if (anchorGradient_) return anchorGradient_(x);
    return centralGradient<Scalar>(
        [this](const Point& p) {
          const Mat<Scalar> rho = anchor(p);
          DenseArray<Scalar> out({rank_, baseDim_});
          for (int a = 0; a < rank_; ++a)
            for (int i = 0; i < baseDim_; ++i) out(a, i) = rho(a, i);
          return out;
        },
        x, step_);
  }

  DenseArray<Scalar> bracketGradient(const Point& x) const {
    if (bracketGradient_) return antisymmetrizeGradient(bracketGradient_(x));
    return centralGradient<Scalar>([this](const Point& p) { return bracketCoefficients(p); }, x, step_);
  }

  void checkPoint(const Point& x) const {
    requireDims(x.size() == baseDim_, "base point has wrong dimension");
  }

 private:
  DenseArray<Scalar> antisymmetrize(DenseArray<Scalar> c) const {
    requireDims(c.shape() == std::vector<int>{rank_, rank_, rank_}, "bracket callback returned wrong shape");
    for (int a = 0; a < rank_; ++a)
      for (int b = a; b < rank_; ++b)
        for (int g = 0; g < rank_; ++g) {
          const Scalar v = Scalar(0.5) * (c(a, b, g) - c(b, a, g));
          c(a, b, g) = v;
          c(b, a, g) = -v;
        }
    return c;
  }

  DenseArray<Scalar> antisymmetrizeGradient(DenseArray<Scalar> g) const {
    requireDims(g.shape() == std::vector<int>{rank_, rank_, rank_, baseDim_},
                "bracket gradient callback returned wrong shape");
    for (int a = 0; a < rank_; ++a)
      for (int b = a; b < rank_; ++b)
        for (int c = 0; c < rank_; ++c)
          for (int j = 0; j < baseDim_; ++j) {
            const Scalar v = Scalar(0.5) * (g(a, b, c, j) - g(b, a, c, j));
            g(a, b, c, j) = v;
            g(b, a, c, j) = -v;
          }
    return g;
  }

  int baseDim_;
  int rank_;
  AnchorFn anchor_;
  TensorFn bracket_;
  TensorFn anchorGradient_;
  TensorFn bracketGradient_;
  Scalar step_ = Scalar(kDefaultStep);
};

/// A section sigma = sigma^alpha e_alpha given by its components.
template <typename Scalar>
struct SectionOfE {
  std::function<Vec<Scalar>(const Vec<Scalar>&)> coeffs;
  /// Optional analytic Jacobian d_i sigma^alpha, shape (k, n).
  std::function<Mat<Scalar>(const Vec<Scalar>&)> jacobian;

  Vec<Scalar> operator()(const Vec<Scalar>& x) const { return coeffs(x); }

  Mat<Scalar> jacobianAt(const Vec<Scalar>& x, Scalar h) const {
    if (jacobian) return jacobian(x);
    return centralJacobian<Scalar>(coeffs, x, h);
  }

  static SectionOfE constant(Vec<Scalar> value, int baseDim) {
    const Eigen::Index k = value.size();
    return {[value](const Vec<Scalar>&) { return value; },
            [k, baseDim](const Vec<Scalar>&) { return Mat<Scalar>::Zero(k, baseDim).eval(); }};
  }

  static SectionOfE basis(int rank, int alpha, int baseDim) {
    return constant(Vec<Scalar>::Unit(rank, alpha), baseDim);
  }
};

/// A p-form on E: coefficients omega_{alpha_1..alpha_p}(x) stored as a full
/// antisymmetric array of shape (k, ..., k).
template <typename Scalar>
struct PForm {
  int degree = 0;
  std::function<DenseArray<Scalar>(const Vec<Scalar>&)> coeffs;
  /// Optional analytic gradient, shape (k, ..., k, n).
  std::function<DenseArray<Scalar>(const Vec<Scalar>&)> gradient;

  DenseArray<Scalar> operator()(const Vec<Scalar>& x) const { return coeffs(x); }

  DenseArray<Scalar> gradientAt(const Vec<Scalar>& x, Scalar h) const {
    if (gradient) return gradient(x);
    return centralGradient<Scalar>(coeffs, x, h);
  }

  /// Wraps arbitrary coefficients, projecting them onto their antisymmetric part.
  static PForm antisymmetric(int degree, std::function<DenseArray<Scalar>(const Vec<Scalar>&)> raw) {
    return {degree, [raw = std::move(raw)](const Vec<Scalar>& x) { return antisymmetrized(raw(x)); }, {}};
  }

  /// A function f on the base, viewed as a 0-form.
  static PForm function(std::function<Scalar(const Vec<Scalar>&)> f,
                        std::function<Vec<Scalar>(const Vec<Scalar>&)> grad = {}) {
    PForm out;
    out.degree = 0;
    out.coeffs = [f](const Vec<Scalar>& x) {
      DenseArray<Scalar> a;
      a() = f(x);
      return a;
    };
    if (grad) {
      out.gradient = [grad](const Vec<Scalar>& x) {
        const Vec<Scalar> g = grad(x);
        DenseArray<Scalar> a({static_cast<int>(g.size())});
        a.data() = g;
        return a;
      };
    }
    return out;
  }

  /// The dual basis element e^beta as a constant 1-form.
  static PForm coframe(int rank, int beta, int baseDim) {
    PForm out;
    out.degree = 1;
    out.coeffs = [rank, beta](const Vec<Scalar>&) {
      DenseArray<Scalar> a({rank});
      a(beta) = Scalar(1);
      return a;
    };
    out.gradient = [rank, baseDim](const Vec<Scalar>&) { return DenseArray<Scalar>({rank, baseDim}); };
    return out;
  }
};

/// v^i = rho_alpha^i(x) a^alpha.
template <typename Scalar>
Vec<Scalar> anchorApply(const LieAlgebroidModel<Scalar>& A, const Vec<Scalar>& x, const Vec<Scalar>& a) {
  requireDims(a.size() == A.rank(), "anchorApply: fibre vector has wrong dimension");
  return A.anchor(x).transpose() * a;
}

/// [sigma, eta]^gamma = rho(sigma) eta^gamma - rho(eta) sigma^gamma + C_{ab}^gamma sigma^a eta^b.
template <typename Scalar>
Vec<Scalar> bracket(const LieAlgebroidModel<Scalar>& A, const SectionOfE<Scalar>& sigma,
                    const SectionOfE<Scalar>& eta, const Vec<Scalar>& x) {
  const int k = A.rank();
  const Vec<Scalar> s = sigma(x);
  const Vec<Scalar> e = eta(x);
  requireDims(s.size() == k && e.size() == k, "bracket: section has wrong rank");
  const Mat<Scalar> rho = A.anchor(x);
  const Vec<Scalar> rs = rho.transpose() * s;
  const Vec<Scalar> re = rho.transpose() * e;
  const Vec<Scalar> derivative = eta.jacobianAt(x, A.step()) * rs - sigma.jacobianAt(x, A.step()) * re;
  // summing over a < b with (s_a e_b - s_b e_a) keeps the result exactly antisymmetric
  const DenseArray<Scalar> C = A.bracketCoefficients(x);
  Vec<Scalar> algebraic = Vec<Scalar>::Zero(k);
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) {
      const Scalar w = s(a) * e(b) - s(b) * e(a);
      if (w == Scalar(0)) continue;
      for (int g = 0; g < k; ++g) algebraic(g) += C(a, b, g) * w;
    }
  return derivative + algebraic;
}

/// Coefficients of d(omega) at x, a full antisymmetric array of degree p+1.
template <typename Scalar>
DenseArray<Scalar> exteriorDifferential(const LieAlgebroidModel<Scalar>& A, const PForm<Scalar>& omega,
                                        const Vec<Scalar>& x) {
  const int k = A.rank();
  const int n = A.baseDim();
  const int p = omega.degree;
  if (p < 0 || p >= k) throw std::invalid_argument("exteriorDifferential: degree must satisfy 0 <= p < rank");
  const Mat<Scalar> rho = A.anchor(x);
  const DenseArray<Scalar> C = A.bracketCoefficients(x);
  const DenseArray<Scalar> w = omega(x);
  requireDims(w.shape() == std::vector<int>(static_cast<std::size_t>(p), k), "exteriorDifferential: bad coefficient shape");
  const DenseArray<Scalar> dw = omega.gradientAt(x, A.step());

  DenseArray<Scalar> out = DenseArray<Scalar>::cube(p + 1, k);
  std::vector<int> restGrad(static_cast<std::size_t>(p + 1));
  std::vector<int> withBeta(static_cast<std::size_t>(p));
  forEachIndex(out.shape(), [&](std::span<const int> idx) {
    if (permutationSign(idx) == 0) return;
    Scalar acc(0);
    // anchor terms
    for (int i = 0; i <= p; ++i) {
      for (int q = 0, r = 0; q <= p; ++q)
        if (q != i) restGrad[static_cast<std::size_t>(r++)] = idx[static_cast<std::size_t>(q)];
      const Scalar sign = (i % 2 == 0) ? Scalar(1) : Scalar(-1);
      for (int j = 0; j < n; ++j) {
        restGrad[static_cast<std::size_t>(p)] = j;
        acc += sign * rho(idx[static_cast<std::size_t>(i)], j) * dw.at(restGrad);
      }
    }
    // bracket terms
    for (int i = 0; i <= p; ++i)
      for (int j = i + 1; j <= p; ++j) {
        for (int q = 0, r = 1; q <= p; ++q)
          if (q != i && q != j) withBeta[static_cast<std::size_t>(r++)] = idx[static_cast<std::size_t>(q)];
        const Scalar sign = ((i + j) % 2 == 0) ? Scalar(1) : Scalar(-1);
        for (int b = 0; b < k; ++b) {
          const Scalar c = C(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)], b);
          if (c == Scalar(0)) continue;
          withBeta[0] = b;
          acc += sign * c * w.at(withBeta);
        }
      }
    out.at(idx) = acc;
  });
  return out;
}

/// Interior product (i_sigma omega)_{a_2..a_p} = sigma^a omega_{a a_2..a_p}.
template <typename Scalar>
DenseArray<Scalar> contract(const Vec<Scalar>& sigma, const DenseArray<Scalar>& omega) {
  const int p = omega.rank();
  if (p == 0) throw std::invalid_argument("contract: cannot contract a 0-form");
  const int k = omega.extent(0);
  requireDims(sigma.size() == k, "contract: section has wrong rank");
  DenseArray<Scalar> out = DenseArray<Scalar>::cube(p - 1, k);
  std::vector<int> full(static_cast<std::size_t>(p));
  forEachIndex(out.shape(), [&](std::span<const int> idx) {
    std::copy(idx.begin(), idx.end(), full.begin() + 1);
    Scalar acc(0);
    for (int a = 0; a < k; ++a) {
      full[0] = a;
      acc += sigma(a) * omega.at(full);
    }
    out.at(idx) = acc;
  });
  return out;
}

/// The form d(omega) as a lazily evaluated p+1 form (gradient by finite differences).
template <typename Scalar>
PForm<Scalar> exteriorDerivativeForm(const LieAlgebroidModel<Scalar>& A, PForm<Scalar> omega) {
  PForm<Scalar> out;
  out.degree = omega.degree + 1;
  out.coeffs = [A, omega = std::move(omega)](const Vec<Scalar>& x) { return exteriorDifferential(A, omega, x); };
  return out;
}

/// i_sigma omega as a form of degree p-1 whose gradient follows the product rule.
template <typename Scalar>
PForm<Scalar> contractionForm(const LieAlgebroidModel<Scalar>& A, SectionOfE<Scalar> sigma, PForm<Scalar> omega) {
  if (omega.degree == 0) throw std::invalid_argument("contractionForm: cannot contract a 0-form");
  const Scalar h = A.step();
  const int n = A.baseDim();
  PForm<Scalar> out;
  out.degree = omega.degree - 1;
  out.coeffs = [sigma, omega](const Vec<Scalar>& x) { return contract(sigma(x), omega(x)); };
  out.gradient = [sigma, omega, h, n](const Vec<Scalar>& x) {
    const Vec<Scalar> s = sigma(x);
    const Mat<Scalar> ds = sigma.jacobianAt(x, h);
    const DenseArray<Scalar> w = omega(x);
    const DenseArray<Scalar> dw = omega.gradientAt(x, h);
    const int p = w.rank();
    const int k = static_cast<int>(s.size());
    std::vector<int> shape(static_cast<std::size_t>(p - 1), k);
    shape.push_back(n);
    DenseArray<Scalar> g(shape);
    std::vector<int> full(static_cast<std::size_t>(p));
    std::vector<int> fullGrad(static_cast<std::size_t>(p + 1));
    forEachIndex(shape, [&](std::span<const int> idx) {
      const int j = idx[static_cast<std::size_t>(p - 1)];
      std::copy(idx.begin(), idx.end() - 1, full.begin() + 1);
      std::copy(idx.begin(), idx.end(), fullGrad.begin() + 1);
      Scalar acc(0);
      for (int a = 0; a < k; ++a) {
        full[0] = a;
        fullGrad[0] = a;
        acc += ds(a, j) * w.at(full) + s(a) * dw.at(fullGrad);
      }
      g.at(idx) = acc;
    });
    return g;
  };
  return out;
}

/// Lie derivative d_sigma omega = i_sigma d omega + d i_sigma omega at x.
template <typename Scalar>
DenseArray<Scalar> lieDerivative(const LieAlgebroidModel<Scalar>& A, const SectionOfE<Scalar>& sigma,
                                 const PForm<Scalar>& omega, const Vec<Scalar>& x) {
  const int k = A.rank();
  const Vec<Scalar> s = sigma(x);
  requireDims(s.size() == k, "lieDerivative: section has wrong rank");
  if (omega.degree == k) {
    // top forms: d omega = 0, only the d(i_sigma omega) term survives
    return exteriorDifferential(A, contractionForm(A, sigma, omega), x);
  }
  DenseArray<Scalar> out = contract(s, exteriorDifferential(A, omega, x));
  if (omega.degree > 0) out += exteriorDifferential(A, contractionForm(A, sigma, omega), x);
  return out;
}

template <typename Scalar>
PForm<Scalar> lieDerivativeForm(const LieAlgebroidModel<Scalar>& A, SectionOfE<Scalar> sigma, PForm<Scalar> omega) {
  PForm<Scalar> out;
  out.degree = omega.degree;
  out.coeffs = [A, sigma = std::move(sigma), omega = std::move(omega)](const Vec<Scalar>& x) {
    return lieDerivative(A, sigma, omega, x);
  };
  return out;
}

template <typename Scalar>
struct StructureResiduals {
  DenseArray<Scalar> anchor;  ///< (alpha, beta, i)
  DenseArray<Scalar> jacobi;  ///< (alpha, beta, gamma, nu)

  Scalar maxAbs() const { return std::max(anchor.maxAbs(), jacobi.maxAbs()); }
};

/// Residuals of the two structure equations at x. Both vanish on a Lie algebroid.
template <typename Scalar>
StructureResiduals<Scalar> structureEquationResiduals(const LieAlgebroidModel<Scalar>& A, const Vec<Scalar>& x) {
  const int k = A.rank();
  const int n = A.baseDim();
  const Mat<Scalar> rho = A.anchor(x);
  const DenseArray<Scalar> drho = A.anchorGradient(x);
  const DenseArray<Scalar> C = A.bracketCoefficients(x);
  const DenseArray<Scalar> dC = A.bracketGradient(x);

  StructureResiduals<Scalar> r{DenseArray<Scalar>({k, k, n}), DenseArray<Scalar>::cube(4, k)};
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      for (int i = 0; i < n; ++i) {
        Scalar acc(0);
        for (int j = 0; j < n; ++j) acc += rho(a, j) * drho(b, i, j) - rho(b, j) * drho(a, i, j);
        for (int g = 0; g < k; ++g) acc -= rho(g, i) * C(a, b, g);
        r.anchor(a, b, i) = acc;
      }

  auto term = [&](int a, int b, int g, int nu) {
    Scalar acc(0);
    for (int i = 0; i < n; ++i) acc += rho(a, i) * dC(b, g, nu, i);
    for (int mu = 0; mu < k; ++mu) acc += C(a, mu, nu) * C(b, g, mu);
    return acc;
  };
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      for (int g = 0; g < k; ++g)
        for (int nu = 0; nu < k; ++nu)
          r.jacobi(a, b, g, nu) = term(a, b, g, nu) + term(b, g, a, nu) + term(g, a, b, nu);
  return r;
}

/// Value of a bundle map E -> E' at a base point: the image point and the
/// matrix Phi with Phi(e_alpha) = Phi(beta, alpha) e'_beta.
template <typename Scalar>
struct BundleMapValue {
  Vec<Scalar> base;
  Mat<Scalar> matrix;
};

/// D(beta, gamma) = rho_gamma^i d_i sigma^beta + C_{gamma alpha}^beta sigma^alpha,
/// the matrix of d_sigma acting on the coframe.
template <typename Scalar>
Mat<Scalar> coframeGenerator(const LieAlgebroidModel<Scalar>& A, const SectionOfE<Scalar>& sigma, const Vec<Scalar>& x) {
  const int k = A.rank();
  const Vec<Scalar> s = sigma(x);
  const Mat<Scalar> rho = A.anchor(x);
  Mat<Scalar> D = sigma.jacobianAt(x, A.step()) * rho.transpose();
  const DenseArray<Scalar> C = A.bracketCoefficients(x);
  for (int b = 0; b < k; ++b)
    for (int g = 0; g < k; ++g) {
      Scalar acc(0);
      for (int a = 0; a < k; ++a) acc += C(g, a, b) * s(a);
      D(b, g) += acc;
    }
  return D;
}

/// Flow of a section for parameter s: the base point moves along rho(sigma)
/// and the fibre matrix solves dM/ds = D(x(s)) M with M(0) = I (classical RK4).
template <typename Scalar>
BundleMapValue<Scalar> flowOfSection(const LieAlgebroidModel<Scalar>& A, const SectionOfE<Scalar>& sigma, Scalar s,
                                     const Vec<Scalar>& x0, int steps) {
  if (steps < 1) throw std::invalid_argument("flowOfSection: steps must be >= 1");
  A.checkPoint(x0);
  const int k = A.rank();
  const Scalar ds = s / static_cast<Scalar>(steps);

  auto rhs = [&](const Vec<Scalar>& x, const Mat<Scalar>& M) {
    return std::pair<Vec<Scalar>, Mat<Scalar>>{anchorApply(A, x, sigma(x)), coframeGenerator(A, sigma, x) * M};
  };

  Vec<Scalar> x = x0;
  Mat<Scalar> M = Mat<Scalar>::Identity(k, k);
  for (int step = 0; step < steps; ++step) {
    const auto [k1x, k1m] = rhs(x, M);
    const auto [k2x, k2m] = rhs(x + Scalar(0.5) * ds * k1x, M + Scalar(0.5) * ds * k1m);
    const auto [k3x, k3m] = rhs(x + Scalar(0.5) * ds * k2x, M + Scalar(0.5) * ds * k2m);
    const auto [k4x, k4m] = rhs(x + ds * k3x, M + ds * k3m);
    x += ds / Scalar(6) * (k1x + Scalar(2) * k2x + Scalar(2) * k3x + k4x);
    M += ds / Scalar(6) * (k1m + Scalar(2) * k2m + Scalar(2) * k3m + k4m);
    if (!x.allFinite() || !M.allFinite()) throw FlowBlowUp("flowOfSection: non-finite state during integration");
  }
  return {x, M};
}

template <typename Scalar>
struct BundleMapResiduals {
  Mat<Scalar> admissibility;  ///< (alpha, i)
  DenseArray<Scalar> morphism;  ///< (alpha, delta, beta)

  Scalar maxAbs() const {
    const Scalar a = admissibility.size() ? admissibility.cwiseAbs().maxCoeff() : Scalar(0);
    return std::max(a, morphism.maxAbs());
  }
};

/// Coordinate admissibility and morphism conditions of a bundle map E -> E'
/// at x. Derivatives of the map are taken by central differences with step h.
template <typename Scalar>
BundleMapResiduals<Scalar> bundleMapResiduals(const LieAlgebroidModel<Scalar>& source,
                                              const LieAlgebroidModel<Scalar>& target,
                                              const std::function<BundleMapValue<Scalar>(const Vec<Scalar>&)>& map,
                                              const Vec<Scalar>& x, Scalar h) {
  const int n = source.baseDim();
  const int k = source.rank();
  const int kt = target.rank();
  const BundleMapValue<Scalar> v = map(x);
  requireDims(v.matrix.rows() == kt && v.matrix.cols() == k, "bundleMapResiduals: map matrix has wrong shape");

  std::vector<BundleMapValue<Scalar>> plus, minus;
  Vec<Scalar> xp = x;
  for (int j = 0; j < n; ++j) {
    xp(j) = x(j) + h;
    plus.push_back(map(xp));
    xp(j) = x(j) - h;
    minus.push_back(map(xp));
    xp(j) = x(j);
  }
  const Mat<Scalar> rho = source.anchor(x);
  const DenseArray<Scalar> C = source.bracketCoefficients(x);
  const Mat<Scalar> rhoT = target.anchor(v.base);
  const DenseArray<Scalar> CT = target.bracketCoefficients(v.base);

  Mat<Scalar> dphi(target.baseDim(), n);  // d_j phi^i
  std::vector<Mat<Scalar>> dPhi;          // d_j Phi
  for (int j = 0; j < n; ++j) {
    dphi.col(j) = (plus[j].base - minus[j].base) / (2 * h);
    dPhi.push_back((plus[j].matrix - minus[j].matrix) / (2 * h));
  }

  BundleMapResiduals<Scalar> r{rho * dphi.transpose() - v.matrix.transpose() * rhoT, DenseArray<Scalar>({k, k, kt})};
  for (int a = 0; a < k; ++a)
    for (int d = 0; d < k; ++d)
      for (int b = 0; b < kt; ++b) {
        Scalar acc(0);
        for (int g = 0; g < k; ++g) acc += v.matrix(b, g) * C(a, d, g);
        for (int i = 0; i < n; ++i) acc -= rho(a, i) * dPhi[i](b, d) - rho(d, i) * dPhi[i](b, a);
        for (int t = 0; t < kt; ++t)
          for (int s = 0; s < kt; ++s) acc -= CT(t, s, b) * v.matrix(t, a) * v.matrix(s, d);
        r.morphism(a, d, b) = acc;
      }
  return r;
}

/// Standard algebroid TM over R^n in the coordinate basis.
template <typename Scalar>
LieAlgebroidModel<Scalar> standardAlgebroid(int n) {
  LieAlgebroidModel<Scalar> A(
      n, n, [n](const Vec<Scalar>&) { return Mat<Scalar>::Identity(n, n).eval(); },
      [n](const Vec<Scalar>&) { return DenseArray<Scalar>::cube(3, n); });
  A.setAnchorGradient([n](const Vec<Scalar>&) { return DenseArray<Scalar>::cube(3, n); });
  A.setBracketGradient([n](const Vec<Scalar>&) { return DenseArray<Scalar>({n, n, n, n}); });
  return A;
}

/// A Lie algebra with constants C viewed as an algebroid over R^n with zero anchor.
template <typename Scalar>
LieAlgebroidModel<Scalar> lieAlgebraAlgebroid(const DenseArray<Scalar>& C, int baseDim = 0) {
  const int k = C.extent(0);
  LieAlgebroidModel<Scalar> A(
      baseDim, k, [k, baseDim](const Vec<Scalar>&) { return Mat<Scalar>::Zero(k, baseDim).eval(); },
      [C](const Vec<Scalar>&) { return C; });
  A.setAnchorGradient([k, baseDim](const Vec<Scalar>&) { return DenseArray<Scalar>({k, baseDim, baseDim}); });
  A.setBracketGradient([k, baseDim](const Vec<Scalar>&) { return DenseArray<Scalar>({k, k, k, baseDim}); });
  return A;
}

/// Structure constants epsilon_{alpha beta gamma} of so(3).
template <typename Scalar>
DenseArray<Scalar> so3Constants() {
  DenseArray<Scalar> C = DenseArray<Scalar>::cube(3, 3);
  forEachIndex(C.shape(), [&](std::span<const int> idx) { C.at(idx) = static_cast<Scalar>(permutationSign(idx)); });
  return C;
}

}  // namespace algebroid
