#include "algebroid/fields.hpp"

#include <json.hpp>

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace algebroid {

std::string toString(Boundary b) { return b == Boundary::Periodic ? "periodic" : "one_sided"; }

Boundary boundaryFromString(const std::string& s) {
  if (s == "periodic") return Boundary::Periodic;
  if (s == "one_sided") return Boundary::OneSided;
  throw std::invalid_argument("unknown boundary '" + s + "' (expected periodic or one_sided)");
}

std::size_t GridSpec::nodeCount() const {
  std::size_t n = 1;
  for (int e : extents) n *= static_cast<std::size_t>(e);
  return n;
}

std::vector<int> GridSpec::multiIndex(std::size_t node) const {
  std::vector<int> idx(extents.size());
  for (std::size_t i = 0; i < extents.size(); ++i) {
    idx[i] = static_cast<int>(node % static_cast<std::size_t>(extents[i]));
    node /= static_cast<std::size_t>(extents[i]);
  }
  return idx;
}

std::size_t GridSpec::linearIndex(const std::vector<int>& idx) const {
  std::size_t node = 0;
  for (std::size_t i = extents.size(); i-- > 0;) node = node * static_cast<std::size_t>(extents[i]) + idx[i];
  return node;
}

Vector GridSpec::coordinates(std::size_t node) const {
  const std::vector<int> idx = multiIndex(node);
  Vector x(dim());
  for (int i = 0; i < dim(); ++i) x(i) = (origin.empty() ? 0.0 : origin[i]) + idx[i] * spacing[i];
  return x;
}

double GridSpec::cellVolume() const {
  double v = 1;
  for (double h : spacing) v *= h;
  return v;
}

void GridSpec::validate() const {
  requireDims(!extents.empty(), "GridSpec: at least one axis required");
  requireDims(spacing.size() == extents.size(), "GridSpec: one spacing per axis required");
  requireDims(origin.empty() || origin.size() == extents.size(), "GridSpec: origin must match the axis count");
  for (int e : extents) requireDims(e >= 3, "GridSpec: grid too small for the difference stencil (extent < 3)");
  for (double h : spacing) requireDims(h > 0 && std::isfinite(h), "GridSpec: spacing must be positive");
}

GridSpec GridSpec::periodicBox(int r, int n) {
  GridSpec g;
  g.extents.assign(r, n);
  g.spacing.assign(r, 2 * M_PI / n);
  g.origin.assign(r, 0.0);
  g.boundary = Boundary::Periodic;
  return g;
}

Vector gridDerivative(const GridSpec& grid, std::size_t node, int axis,
                      const std::function<Vector(std::size_t)>& field) {
  std::vector<int> idx = grid.multiIndex(node);
  const int n = grid.extents[axis];
  const double h = grid.spacing[axis];
  const int i = idx[axis];
  auto at = [&](int j) {
    idx[axis] = j;
    return field(grid.linearIndex(idx));
  };
  if (grid.boundary == Boundary::Periodic) return (at((i + 1) % n) - at((i + n - 1) % n)) / (2 * h);
  if (i == 0) return (-3 * at(0) + 4 * at(1) - at(2)) / (2 * h);
  if (i == n - 1) return (3 * at(n - 1) - 4 * at(n - 2) + at(n - 3)) / (2 * h);
  return (at(i + 1) - at(i - 1)) / (2 * h);
}

double gridDivergence(const GridSpec& grid, std::size_t node, const std::function<Vector(std::size_t)>& current) {
  double div = 0;
  for (int a = 0; a < grid.dim(); ++a)
    div += gridDerivative(grid, node, a, [&](std::size_t m) { return Vector::Constant(1, current(m)(a)); })(0);
  return div;
}

DiscretizedSection::DiscretizedSection(GridSpec grid, int fibreDim, int kernelRank)
    : grid_(std::move(grid)), mu_(fibreDim), mk_(kernelRank) {
  grid_.validate();
  requireDims(mu_ >= 0 && mk_ >= 0, "DiscretizedSection: negative field dimension");
  const auto n = static_cast<Eigen::Index>(grid_.nodeCount());
  u_ = Matrix::Zero(mu_, n);
  y_ = Matrix::Zero(mk_ * grid_.dim(), n);
}

Matrix DiscretizedSection::y(std::size_t node) const {
  return y_.col(static_cast<Eigen::Index>(node)).reshaped(mk_, grid_.dim());
}

void DiscretizedSection::setU(std::size_t node, const Vector& u) {
  requireDims(u.size() == mu_, "DiscretizedSection: u has wrong length");
  u_.col(static_cast<Eigen::Index>(node)) = u;
}

void DiscretizedSection::setY(std::size_t node, const Matrix& y) {
  requireDims(y.rows() == mk_ && y.cols() == grid_.dim(), "DiscretizedSection: y has wrong shape");
  y_.col(static_cast<Eigen::Index>(node)) = y.reshaped();
}

JetPoint DiscretizedSection::jet(std::size_t node) const { return {grid_.coordinates(node), u(node), y(node)}; }

DiscretizedSection DiscretizedSection::sample(const GridSpec& grid, int fibreDim, int kernelRank, const Sampler& f) {
  DiscretizedSection s(grid, fibreDim, kernelRank);
  for (std::size_t n = 0; n < s.nodeCount(); ++n) {
    const auto [u, y] = f(grid.coordinates(n));
    s.setU(n, u);
    s.setY(n, y);
  }
  return s;
}

void writeSection(std::ostream& os, const DiscretizedSection& s) {
  const GridSpec& g = s.grid();
  nlohmann::json header = {{"format", "discretized_section"},
                           {"version", 1},
                           {"r", g.dim()},
                           {"m_u", s.fibreDim()},
                           {"m_k", s.kernelRank()},
                           {"extents", g.extents},
                           {"spacing", g.spacing},
                           {"origin", g.origin.empty() ? std::vector<double>(g.dim(), 0.0) : g.origin},
                           {"boundary", toString(g.boundary)}};
  os << header.dump() << '\n';
  os.precision(17);
  for (std::size_t n = 0; n < s.nodeCount(); ++n) {
    const auto col = static_cast<Eigen::Index>(n);
    bool first = true;
    auto put = [&](double v) {
      if (!first) os << ' ';
      os << v;
      first = false;
    };
    for (Eigen::Index i = 0; i < s.uData().rows(); ++i) put(s.uData()(i, col));
    for (Eigen::Index i = 0; i < s.yData().rows(); ++i) put(s.yData()(i, col));
    os << '\n';
  }
  if (!os) throw SectionFormatError("writeSection: stream write failed");
}

DiscretizedSection readSection(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw SectionFormatError("readSection: missing header");
  GridSpec g;
  int mu = 0, mk = 0;
  try {
    const nlohmann::json h = nlohmann::json::parse(line);
    if (h.at("format") != "discretized_section" || h.at("version") != 1)
      throw SectionFormatError("readSection: unsupported format or version");
    g.extents = h.at("extents").get<std::vector<int>>();
    g.spacing = h.at("spacing").get<std::vector<double>>();
    g.origin = h.at("origin").get<std::vector<double>>();
    g.boundary = boundaryFromString(h.at("boundary").get<std::string>());
    mu = h.at("m_u").get<int>();
    mk = h.at("m_k").get<int>();
    if (h.at("r").get<int>() != g.dim()) throw SectionFormatError("readSection: r does not match extents");
  } catch (const nlohmann::json::exception& e) {
    throw SectionFormatError(std::string("readSection: bad header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw SectionFormatError(std::string("readSection: bad header: ") + e.what());
  }
  DiscretizedSection s(g, mu, mk);
  const int width = mu + mk * g.dim();
  for (std::size_t n = 0; n < s.nodeCount(); ++n) {
    if (!std::getline(is, line)) throw SectionFormatError("readSection: truncated data");
    std::istringstream ls(line);
    Vector row(width);
    for (int i = 0; i < width; ++i)
      if (!(ls >> row(i))) throw SectionFormatError("readSection: short row at node " + std::to_string(n));
    std::string extra;
    if (ls >> extra) throw SectionFormatError("readSection: long row at node " + std::to_string(n));
    s.setU(n, row.head(mu));
    s.setY(n, row.tail(width - mu).reshaped(mk, g.dim()));
  }
  if (!s.allFinite()) throw SectionFormatError("readSection: non-finite entries");
  return s;
}

void requireSectionShape(const FibredAlgebroidPair& FA, const DiscretizedSection& phi) {
  requireDims(phi.baseDim() == FA.baseDim() && phi.fibreDim() == FA.fibreDim() &&
                  phi.kernelRank() == FA.kernelRank(),
              "DiscretizedSection shape does not match the fibred pair");
}

Matrix admissibilityResidual(const FibredAlgebroidPair& FA, const DiscretizedSection& phi, std::size_t node) {
  requireSectionShape(FA, phi);
  const int r = FA.baseDim();
  const int mu = FA.fibreDim();
  Matrix res(mu, r);
  if (mu == 0) return res;
  const JetPoint p = phi.jet(node);
  const FibredCoefficients c = FA.coefficients(p.x, p.u);
  Matrix du(mu, r);  // (A, i)
  for (int i = 0; i < r; ++i) du.col(i) = gridDerivative(phi.grid(), node, i, [&](std::size_t m) { return phi.u(m); });
  for (int a = 0; a < r; ++a)
    res.col(a) = du * c.anchorBase.row(a).transpose() - c.anchorHorizontal.row(a).transpose() -
                 c.anchorVertical.transpose() * p.y.col(a);
  return res;
}

Array morphismResidual(const FibredAlgebroidPair& FA, const DiscretizedSection& phi, std::size_t node) {
  requireSectionShape(FA, phi);
  const int r = FA.baseDim();
  const int mk = FA.kernelRank();
  const JetPoint p = phi.jet(node);
  const FibredCoefficients c = FA.coefficients(p.x, p.u);

  // dy[i] = d/dx^i of y, as an (alpha, a) matrix
  std::vector<Matrix> dy(r);
  for (int i = 0; i < r; ++i)
    dy[i] = gridDerivative(phi.grid(), node, i, [&](std::size_t m) {
              return Vector(phi.yData().col(static_cast<Eigen::Index>(m)));
            }).reshaped(mk, r);

  Array M({r, r, mk});
  for (int a = 0; a < r; ++a)
    for (int b = a + 1; b < r; ++b)
      for (int al = 0; al < mk; ++al) {
        double v = 0;
        for (int i = 0; i < r; ++i) v += c.anchorBase(b, i) * dy[i](al, a) - c.anchorBase(a, i) * dy[i](al, b);
        for (int g = 0; g < mk; ++g) {
          v += c.bracketMixed(b, g, al) * p.y(g, a) - c.bracketMixed(a, g, al) * p.y(g, b);
          for (int be = 0; be < mk; ++be) v += c.bracketVertical(be, g, al) * p.y(be, b) * p.y(g, a);
        }
        for (int d = 0; d < r; ++d) v += p.y(al, d) * c.bracketBase(a, b, d);
        v -= c.bracketHorizontal(a, b, al);
        M(a, b, al) = v;
        M(b, a, al) = -v;
      }
  return M;
}

std::vector<std::pair<int, int>> basePairs(int r) {
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < r; ++a)
    for (int b = a + 1; b < r; ++b) pairs.emplace_back(a, b);
  return pairs;
}

ResidualField residualReport(const FibredAlgebroidPair& FA, const DiscretizedSection& phi, double tol) {
  requireSectionShape(FA, phi);
  const int r = FA.baseDim();
  const int mu = FA.fibreDim();
  const int mk = FA.kernelRank();
  const auto pairs = basePairs(r);
  const auto nodes = static_cast<Eigen::Index>(phi.nodeCount());
  ResidualField f;
  f.admissibility = Matrix::Zero(mu * r, nodes);
  f.morphism = Matrix::Zero(mk * static_cast<Eigen::Index>(pairs.size()), nodes);
  for (Eigen::Index n = 0; n < nodes; ++n) {
    const auto node = static_cast<std::size_t>(n);
    f.admissibility.col(n) = admissibilityResidual(FA, phi, node).reshaped();
    const Array M = morphismResidual(FA, phi, node);
    for (std::size_t q = 0; q < pairs.size(); ++q)
      for (int al = 0; al < mk; ++al) f.morphism(al + mk * static_cast<Eigen::Index>(q), n) = M(pairs[q].first, pairs[q].second, al);
  }
  const double w = phi.grid().cellVolume();
  auto maxAbs = [](const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; };
  f.admissibilityMax = maxAbs(f.admissibility);
  f.morphismMax = maxAbs(f.morphism);
  f.admissibilityL2 = std::sqrt(w * f.admissibility.squaredNorm());
  f.morphismL2 = std::sqrt(w * f.morphism.squaredNorm());
  f.isMorphism = f.admissibilityMax <= tol && f.morphismMax <= tol;
  return f;
}

}  // namespace algebroid
