#pragma once

// Sections of pi sampled on a regular grid over N, and the admissibility and
// morphism residuals evaluated with second-order finite differences.

#include "algebroid/fibred_jet.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace algebroid {

enum class Boundary { Periodic, OneSided };

std::string toString(Boundary b);
Boundary boundaryFromString(const std::string& s);

/// Regular grid on N. Node (i_0, ..., i_{r-1}) sits at origin + i * spacing;
/// linear node numbers run with axis 0 fastest. For periodic grids the point
/// origin + extent * spacing is identified with the origin.
struct GridSpec {
  std::vector<int> extents;
  std::vector<double> spacing;
  std::vector<double> origin;  ///< empty means all zeros
  Boundary boundary = Boundary::Periodic;

  int dim() const { return static_cast<int>(extents.size()); }
  std::size_t nodeCount() const;
  std::vector<int> multiIndex(std::size_t node) const;
  std::size_t linearIndex(const std::vector<int>& idx) const;
  Vector coordinates(std::size_t node) const;
  /// Coordinate volume of one cell, the weight of the discrete L2 norm.
  double cellVolume() const;

  /// Throws DimensionError for extents < 3, non-positive spacing or
  /// inconsistent array lengths.
  void validate() const;

  /// Cube [0, 2 pi)^r with n nodes per axis and periodic wrap.
  static GridSpec periodicBox(int r, int n);
};

/// First derivative along `axis` of a node-valued field: central differences
/// in the interior (and everywhere when periodic), second-order one-sided
/// stencils on the faces of a non-periodic grid.
Vector gridDerivative(const GridSpec& grid, std::size_t node, int axis,
                      const std::function<Vector(std::size_t)>& field);

/// sum_a d/dx^a J^a(node) for a node-valued vector J of length r.
double gridDivergence(const GridSpec& grid, std::size_t node, const std::function<Vector(std::size_t)>& current);

class SectionFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A section Phi of pi on a grid: Phi(ebar_a) = e_a + y_a^alpha e_alpha over
/// the base map x -> (x, u(x)).
class DiscretizedSection {
 public:
  DiscretizedSection(GridSpec grid, int fibreDim, int kernelRank);

  const GridSpec& grid() const { return grid_; }
  int baseDim() const { return grid_.dim(); }
  int fibreDim() const { return mu_; }
  int kernelRank() const { return mk_; }
  std::size_t nodeCount() const { return static_cast<std::size_t>(u_.cols()); }

  Vector u(std::size_t node) const { return u_.col(static_cast<Eigen::Index>(node)); }
  /// (alpha, a) = y_a^alpha
  Matrix y(std::size_t node) const;
  void setU(std::size_t node, const Vector& u);
  void setY(std::size_t node, const Matrix& y);
  JetPoint jet(std::size_t node) const;

  /// Raw storage: u is m_u x nodes; y is (m_k r) x nodes with alpha fastest.
  const Matrix& uData() const { return u_; }
  const Matrix& yData() const { return y_; }

  bool allFinite() const { return u_.allFinite() && y_.allFinite(); }

  using Sampler = std::function<std::pair<Vector, Matrix>(const Vector& x)>;
  /// Samples (u, y) at every node.
  static DiscretizedSection sample(const GridSpec& grid, int fibreDim, int kernelRank, const Sampler& f);

 private:
  GridSpec grid_;
  int mu_;
  int mk_;
  Matrix u_;
  Matrix y_;
};

/// Text format: one JSON header line followed by one line per node (axis 0
/// fastest) holding u^1..u^{m_u} then y_a^alpha with alpha fastest.
void writeSection(std::ostream& os, const DiscretizedSection& s);
DiscretizedSection readSection(std::istream& is);

void requireSectionShape(const FibredAlgebroidPair& FA, const DiscretizedSection& phi);

/// (A, a) = rho_a^i d_i u^A - rho_a^A - rho_alpha^A y_a^alpha.
Matrix admissibilityResidual(const FibredAlgebroidPair& FA, const DiscretizedSection& phi, std::size_t node);

/// (a, b, alpha) = M_{ab}^alpha, exactly antisymmetric in (a, b):
///   rho_b^i d_i y_a - rho_a^i d_i y_b + C_{b gamma} y_a^gamma - C_{a gamma} y_b^gamma
///   + C_{beta gamma} y_b^beta y_a^gamma + y_d^alpha C_{ab}^d - C_{ab}^alpha.
Array morphismResidual(const FibredAlgebroidPair& FA, const DiscretizedSection& phi, std::size_t node);

/// Ordered pairs (a, b) with a < b in the order used by ResidualField.
std::vector<std::pair<int, int>> basePairs(int r);

struct ResidualField {
  Matrix admissibility;  ///< row A + m_u a, one column per node
  Matrix morphism;       ///< row alpha + m_k p for the p-th pair of basePairs(r)
  double admissibilityMax = 0;
  double admissibilityL2 = 0;
  double morphismMax = 0;
  double morphismL2 = 0;
  bool isMorphism = false;
};

/// Both residuals over all nodes. The L2 norms are sqrt(cellVolume * sum |v|^2).
ResidualField residualReport(const FibredAlgebroidPair& FA, const DiscretizedSection& phi, double tol);

}  // namespace algebroid
