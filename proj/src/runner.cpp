#include "algebroid/runner.hpp"

#include "algebroid/random_fields.hpp"
#include "algebroid/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <sstream>

namespace algebroid {

namespace {

[[noreturn]] void schemaError(const std::string& msg) { throw ConfigError("config: " + msg); }

// ------------------------------------------------------------ config access

const Json& emptyObject() {
  static const Json empty = Json::object();
  return empty;
}

/// Typed access to one config object; every accessor validates.
class Reader {
 public:
  Reader(const Json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
    if (!j_.is_object()) schemaError(ctx_ + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  void allowOnly(const std::vector<std::string>& keys) const {
    for (const auto& [k, v] : j_.items())
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) schemaError("unknown key '" + path(k) + "'");
  }

  double number(const std::string& key, std::optional<double> def = std::nullopt) const {
    if (!has(key)) {
      if (def) return *def;
      schemaError("missing number '" + path(key) + "'");
    }
    const Json& v = j_.at(key);
    if (!v.is_number()) schemaError("'" + path(key) + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) schemaError("'" + path(key) + "' must be finite");
    return d;
  }

  double positive(const std::string& key, std::optional<double> def = std::nullopt) const {
    const double d = number(key, def);
    if (!(d > 0)) schemaError("'" + path(key) + "' must be positive");
    return d;
  }

  int integer(const std::string& key, int def, int lo, int hi) const {
    if (!has(key)) return def;
    const Json& v = j_.at(key);
    if (!v.is_number_integer()) schemaError("'" + path(key) + "' must be an integer");
    const auto i = v.get<long long>();
    if (i < lo || i > hi)
      schemaError("'" + path(key) + "' must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(i);
  }

  std::string string(const std::string& key, std::optional<std::string> def = std::nullopt) const {
    if (!has(key)) {
      if (def) return *def;
      schemaError("missing string '" + path(key) + "'");
    }
    if (!j_.at(key).is_string()) schemaError("'" + path(key) + "' must be a string");
    return j_.at(key).get<std::string>();
  }

  Vector vector(const std::string& key, int size, std::optional<Vector> def = std::nullopt) const {
    if (!has(key)) {
      if (def) return *def;
      schemaError("missing array '" + path(key) + "'");
    }
    return toVector(j_.at(key), path(key), size);
  }

  Matrix matrix(const std::string& key, int rows, int cols, std::optional<Matrix> def = std::nullopt) const {
    if (!has(key)) {
      if (def) return *def;
      schemaError("missing matrix '" + path(key) + "'");
    }
    const Json& v = j_.at(key);
    if (!v.is_array() || static_cast<int>(v.size()) != rows)
      schemaError("'" + path(key) + "' must be an array of " + std::to_string(rows) + " rows");
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) m.row(i) = toVector(v[i], path(key), cols).transpose();
    return m;
  }

  Reader object(const std::string& key) const {
    return has(key) ? Reader(j_.at(key), path(key)) : Reader(emptyObject(), path(key));
  }

  const Json& json() const { return j_; }
  std::string path(const std::string& key) const { return ctx_.empty() ? key : ctx_ + "." + key; }

 private:
  static Vector toVector(const Json& v, const std::string& where, int size) {
    if (!v.is_array() || (size >= 0 && static_cast<int>(v.size()) != size))
      schemaError("'" + where + "' must be an array" + (size >= 0 ? " of length " + std::to_string(size) : ""));
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) schemaError("'" + where + "' must hold numbers");
      out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    if (!out.allFinite()) schemaError("'" + where + "' must be finite");
    return out;
  }

  const Json& j_;
  std::string ctx_;
};

// ------------------------------------------------------------ check specs

struct CheckSpec {
  std::string name;
  std::optional<double> tol;
  std::optional<std::pair<double, double>> ratio;
};

/// Check name -> whether the check measures a convergence ratio.
using CheckTable = std::map<std::string, bool>;

const std::map<std::string, CheckTable>& checkTables() {
  static const std::map<std::string, CheckTable> tables = {
      {"standard", {{"structure", false}, {"admissibility", true}, {"morphism_convergence", true}, {"first_variation", true}}},
      {"rigid_body",
       {{"structure", false}, {"energy_drift", false}, {"casimir_drift", false}, {"drift_ratio", true}, {"el_residual", false}}},
      {"heavy_top",
       {{"structure", false},
        {"energy_drift", false},
        {"casimir_drift", false},
        {"sphere_drift", false},
        {"noether_drift", false},
        {"el_residual", false}}},
      {"free_particle", {{"structure", false}, {"exact_solution", false}}},
      {"chern_simons",
       {{"structure", false}, {"morphism_convergence", true}, {"el_bound", false}, {"lagrangian_difference", false}}},
      {"atiyah", {{"structure", false}, {"reduction", false}, {"morphism_convergence", true}}},
  };
  return tables;
}

std::vector<CheckSpec> parseChecks(const Reader& root, const std::string& kind) {
  if (!root.has("checks")) schemaError("missing object 'checks'");
  const Reader checks = root.object("checks");
  if (checks.json().empty()) schemaError("'checks' must list at least one check");
  const CheckTable& table = checkTables().at(kind);
  std::vector<CheckSpec> out;
  for (const auto& [name, value] : checks.json().items()) {
    const auto it = table.find(name);
    if (it == table.end()) schemaError("check '" + name + "' is not available for kind '" + kind + "'");
    const Reader c(value, "checks." + name);
    c.allowOnly({"tol", "ratio"});
    CheckSpec spec{name, {}, {}};
    if (c.has("tol")) {
      spec.tol = c.number("tol");
      if (*spec.tol < 0) schemaError("'checks." + name + ".tol' must be non-negative");
    }
    if (c.has("ratio")) {
      if (!it->second) schemaError("check '" + name + "' has no convergence ratio");
      const Vector r = c.vector("ratio", 2);
      if (!(r(0) > 0 && r(0) < r(1))) schemaError("'checks." + name + ".ratio' must be [lo, hi] with 0 < lo < hi");
      spec.ratio = std::pair{r(0), r(1)};
    }
    if (!spec.tol && !spec.ratio) schemaError("check '" + name + "' needs 'tol' or 'ratio'");
    out.push_back(spec);
  }
  return out;
}

bool wants(const std::vector<CheckSpec>& checks, const std::string& name) {
  return std::any_of(checks.begin(), checks.end(), [&](const CheckSpec& c) { return c.name == name; });
}

// ------------------------------------------------------------ parameters

const std::vector<std::string> kCommonKeys = {"schema", "id", "kind", "seed", "description", "checks"};

std::vector<std::string> withCommon(std::vector<std::string> keys) {
  keys.insert(keys.end(), kCommonKeys.begin(), kCommonKeys.end());
  return keys;
}

struct StandardParams {
  int r = 2;
  int mu = 2;
  std::string connection = "fourier";
  double amplitude = 0.5;
  std::vector<Matrix> K;
  Matrix weights;
  Potential potential;
  int n = 32;
};

struct MechanicsParams {
  Vector inertia;
  Vector u0;
  Vector y0;
  Vector gravity;
  std::optional<int> axis;
  double dt = 1e-3;
  double tEnd = 10;
};

struct AlgebraParams {
  std::string type = "so3";
  int dim = 3;
  Array constants() const { return type == "so3" ? so3Constants<double>() : Array({dim, dim, dim}); }
};

struct ChernSimonsParams {
  AlgebraParams algebra;
  Matrix metric;
  double amplitude = 1.0;
  int n = 16;
};

struct AtiyahParams {
  int r = 3;
  MechanicsParams mech;
  double amplitude = 1.0;
  int n = 16;
};

Potential parsePotential(const Reader& p, int mu) {
  p.allowOnly({"type", "mass_sq", "c"});
  const std::string type = p.string("type", "zero");
  if (type == "zero") return Potential::zero();
  if (type == "harmonic") return Potential::harmonic(p.number("mass_sq"));
  if (type == "linear") return Potential::linear(p.vector("c", mu));
  schemaError("'" + p.path("type") + "' must be one of zero, harmonic, linear");
}

StandardParams parseStandard(const Reader& root) {
  root.allowOnly(withCommon({"r", "m_u", "connection", "lagrangian", "grid"}));
  StandardParams P;
  P.r = root.integer("r", 2, 1, 3);
  P.mu = root.integer("m_u", 2, 1, 6);
  const Reader conn = root.object("connection");
  conn.allowOnly({"type", "amplitude", "K"});
  P.connection = conn.string("type", "fourier");
  if (P.connection == "fourier") {
    P.amplitude = conn.number("amplitude", 0.5);
  } else if (P.connection == "linear") {
    if (!conn.has("K") || !conn.json().at("K").is_array() || static_cast<int>(conn.json().at("K").size()) != P.r)
      schemaError("'connection.K' must hold r matrices of size m_u x m_u");
    for (int i = 0; i < P.r; ++i) {
      Json wrap = Json::object();
      wrap["K"] = conn.json().at("K")[static_cast<std::size_t>(i)];
      P.K.push_back(Reader(wrap, "connection").matrix("K", P.mu, P.mu));
    }
  } else if (P.connection != "zero") {
    schemaError("'connection.type' must be one of fourier, zero, linear");
  }
  const Reader lag = root.object("lagrangian");
  lag.allowOnly({"type", "weights", "potential"});
  if (lag.string("type", "quadratic") != "quadratic") schemaError("'lagrangian.type' must be quadratic");
  P.weights = lag.matrix("weights", P.mu, P.r, Matrix::Ones(P.mu, P.r));
  P.potential = parsePotential(lag.object("potential"), P.mu);
  const Reader grid = root.object("grid");
  grid.allowOnly({"n"});
  P.n = grid.integer("n", 32, 4, 512);
  return P;
}

MechanicsParams parseMechanics(const Reader& root, const std::string& kind) {
  MechanicsParams P;
  if (kind == "rigid_body") {
    root.allowOnly(withCommon({"inertia", "y0", "dt", "t_end"}));
    P.inertia = root.vector("inertia", 3, Vector::LinSpaced(3, 1, 3));
    P.y0 = root.vector("y0", 3, Vector::Ones(3));
    P.u0 = Vector(0);
  } else if (kind == "heavy_top") {
    root.allowOnly(withCommon({"inertia", "gravity", "u0", "y0", "symmetry_axis", "dt", "t_end"}));
    P.inertia = root.vector("inertia", 3, Vector::LinSpaced(3, 1, 3));
    P.gravity = root.vector("gravity", 3, Vector::Unit(3, 2));
    P.u0 = root.vector("u0", 3, Vector::Unit(3, 2));
    P.y0 = root.vector("y0", 3, Vector::Ones(3));
    if (root.has("symmetry_axis")) P.axis = root.integer("symmetry_axis", 3, 1, 3) - 1;
  } else {
    root.allowOnly(withCommon({"masses", "u0", "y0", "dt", "t_end"}));
    P.u0 = root.vector("u0", -1);
    const int m = static_cast<int>(P.u0.size());
    if (m < 1) schemaError("'u0' must be non-empty");
    P.y0 = root.vector("y0", m);
    P.inertia = root.vector("masses", m, Vector::Ones(m));
  }
  if (!(P.inertia.array() > 0).all()) schemaError("inertia / masses must be positive");
  P.dt = root.positive("dt", 1e-3);
  P.tEnd = root.positive("t_end", 10.0);
  if (P.tEnd < P.dt) schemaError("'t_end' must be at least 'dt'");
  if (P.tEnd / P.dt > 1e7) schemaError("'t_end' / 'dt' exceeds 1e7 steps");
  return P;
}

AlgebraParams parseAlgebra(const Reader& a) {
  a.allowOnly({"type", "dim"});
  AlgebraParams A;
  A.type = a.string("type", "so3");
  if (A.type == "abelian")
    A.dim = a.integer("dim", 1, 1, 8);
  else if (A.type != "so3")
    schemaError("'" + a.path("type") + "' must be so3 or abelian");
  return A;
}

ChernSimonsParams parseChernSimons(const Reader& root) {
  root.allowOnly(withCommon({"algebra", "metric", "gauge", "grid"}));
  ChernSimonsParams P;
  P.algebra = parseAlgebra(root.object("algebra"));
  const int m = P.algebra.dim;
  P.metric = root.matrix("metric", m, m, Matrix::Identity(m, m));
  const Reader gauge = root.object("gauge");
  gauge.allowOnly({"type", "amplitude"});
  const std::string expected = P.algebra.type == "so3" ? "su2_fourier" : "gradient_fourier";
  if (gauge.string("type", expected) != expected)
    schemaError("'gauge.type' must be " + expected + " for this algebra");
  P.amplitude = gauge.number("amplitude", 1.0);
  const Reader grid = root.object("grid");
  grid.allowOnly({"n"});
  P.n = grid.integer("n", 16, 4, 128);
  try {
    ChernSimonsData{P.algebra.constants(), P.metric}.validate();
  } catch (const std::invalid_argument& e) {
    schemaError(e.what());
  }
  return P;
}

AtiyahParams parseAtiyah(const Reader& root) {
  root.allowOnly(withCommon({"r", "algebra", "inertia", "y0", "dt", "t_end", "gauge", "grid"}));
  AtiyahParams P;
  P.r = root.integer("r", 3, 1, 3);
  if (P.r == 2) schemaError("'r' must be 1 (reduction to the rigid body) or 3 (pure-gauge fields)");
  if (parseAlgebra(root.object("algebra")).type != "so3") schemaError("'algebra.type' must be so3");
  P.mech.inertia = root.vector("inertia", 3, Vector::LinSpaced(3, 1, 3));
  if (!(P.mech.inertia.array() > 0).all()) schemaError("'inertia' must be positive");
  P.mech.y0 = root.vector("y0", 3, Vector::Ones(3));
  P.mech.u0 = Vector(0);
  P.mech.dt = root.positive("dt", 1e-2);
  P.mech.tEnd = root.positive("t_end", 1.0);
  if (P.mech.tEnd < P.mech.dt) schemaError("'t_end' must be at least 'dt'");
  const Reader gauge = root.object("gauge");
  gauge.allowOnly({"type", "amplitude"});
  if (gauge.string("type", "su2_fourier") != "su2_fourier") schemaError("'gauge.type' must be su2_fourier");
  P.amplitude = gauge.number("amplitude", 1.0);
  const Reader grid = root.object("grid");
  grid.allowOnly({"n"});
  P.n = grid.integer("n", 16, 4, 128);
  return P;
}

/// Validates the common part and returns (kind, checks).
std::pair<std::string, std::vector<CheckSpec>> parseCommon(const Json& config) {
  if (!config.is_object()) schemaError("top level must be an object");
  const Reader root(config, "");
  if (!config.contains("schema") || !config.at("schema").is_number_integer() || config.at("schema").get<long long>() != kConfigSchema)
    schemaError("'schema' must be " + std::to_string(kConfigSchema));
  if (root.string("id").empty()) schemaError("'id' must be non-empty");
  const std::string kind = root.string("kind");
  if (!checkTables().count(kind)) throw UnknownScenario("unknown scenario kind '" + kind + "'");
  if (config.contains("seed") && !config.at("seed").is_number_unsigned()) schemaError("'seed' must be a non-negative integer");
  if (config.contains("description")) root.string("description");
  return {kind, parseChecks(root, kind)};
}

void validateKind(const Reader& root, const std::string& kind, const std::vector<CheckSpec>& checks) {
  if (kind == "standard") {
    parseStandard(root);
  } else if (kind == "rigid_body" || kind == "heavy_top" || kind == "free_particle") {
    const MechanicsParams P = parseMechanics(root, kind);
    if (wants(checks, "noether_drift") && !P.axis) schemaError("check 'noether_drift' needs 'symmetry_axis'");
  } else if (kind == "chern_simons") {
    parseChernSimons(root);
  } else {
    const AtiyahParams P = parseAtiyah(root);
    if (wants(checks, "reduction") && P.r != 1) schemaError("check 'reduction' needs r = 1");
    if (wants(checks, "morphism_convergence") && P.r != 3) schemaError("check 'morphism_convergence' needs r = 3");
  }
}

// ------------------------------------------------------------ measurements

struct Measured {
  double maxNorm = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> l2;
  std::vector<std::pair<std::string, double>> ratios;  ///< all must lie in the configured range
  Json extra = Json::object();
};

using Evaluators = std::map<std::string, std::function<Measured()>>;

struct Output {
  Json convergence = Json::array();
  std::vector<CsvTable> tables;
};

template <typename T>
std::function<const T&()> lazy(std::function<T()> make) {
  auto cache = std::make_shared<std::optional<T>>();
  return [cache, make]() -> const T& {
    if (!*cache) *cache = make();
    return **cache;
  };
}

double structureResidual(const FibredAlgebroidPair& FA, std::uint64_t seed) {
  const Algebroid A = FA.totalAlgebroid();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    Vector z(A.baseDim());
    for (auto& v : z) v = d(rng);
    worst = std::max(worst, structureEquationResiduals(A, z).maxAbs());
  }
  return worst;
}

Measured structureCheck(const FibredAlgebroidPair& FA, std::uint64_t seed) {
  Measured m;
  m.maxNorm = structureResidual(FA, seed);
  return m;
}

/// Max and L2 norms of a node-valued scalar magnitude field.
std::pair<double, double> norms(const GridSpec& g, const std::vector<Vector>& values) {
  double mx = 0, sq = 0;
  for (const Vector& v : values) {
    if (v.size() == 0) continue;
    mx = std::max(mx, v.cwiseAbs().maxCoeff());
    sq += v.squaredNorm();
  }
  return {mx, std::sqrt(g.cellVolume() * sq)};
}

/// Two-level convergence study at n and 2n nodes per axis.
Measured convergenceStudy(Output& out, const std::string& check, int n, double boxLength,
                          const std::function<std::pair<double, double>(int)>& measure) {
  const auto coarse = measure(n);
  const auto fine = measure(2 * n);
  Measured m;
  m.maxNorm = coarse.first;
  m.l2 = coarse.second;
  m.ratios.push_back({"max_norm", coarse.first / fine.first});
  out.convergence.push_back({{"check", check},
                             {"parameter", "h"},
                             {"rows", Json::array({{{"step", boxLength / n}, {"max_norm", coarse.first}, {"l2_norm", coarse.second}},
                                                   {{"step", boxLength / (2 * n)}, {"max_norm", fine.first}, {"l2_norm", fine.second}}})}});
  return m;
}

std::vector<std::string> indexedColumns(const std::string& prefix, int count) {
  std::vector<std::string> c;
  for (int i = 1; i <= count; ++i) c.push_back(prefix + std::to_string(i));
  return c;
}

void append(std::vector<std::string>& a, const std::vector<std::string>& b) { a.insert(a.end(), b.begin(), b.end()); }

std::vector<std::string> morphismColumns(int r, int mk) {
  std::vector<std::string> c;
  for (const auto& [a, b] : basePairs(r))
    for (int al = 0; al < mk; ++al)
      c.push_back("M_" + std::to_string(a + 1) + "_" + std::to_string(b + 1) + "_" + std::to_string(al + 1));
  return c;
}

// ------------------------------------------------------------ standard

void runStandard(const StandardParams& P, std::uint64_t seed, const std::vector<CheckSpec>& checks, Evaluators& ev,
                 Output& out) {
  StandardCaseData D;
  if (P.connection == "fourier") {
    D = fourierConnection(P.r, P.mu, seed, P.amplitude);
  } else {
    D.r = P.r;
    D.mu = P.mu;
    const std::vector<Matrix> K = P.K;
    const int r = P.r, mu = P.mu;
    D.connection = [K, r, mu](const Vector&, const Vector& u) {
      Matrix G = Matrix::Zero(r, mu);
      for (std::size_t i = 0; i < K.size(); ++i) G.row(static_cast<Eigen::Index>(i)) = (K[i] * u).transpose();
      return G;
    };
  }
  const FibredAlgebroidPair FA = builderStandard(D);
  const Lagrangian L = quadraticLagrangian(P.weights, P.mu, P.potential);
  auto uField = std::make_shared<FourierField>(P.r, P.mu, seed + 1);
  auto sigmaField = std::make_shared<FourierField>(P.r + P.mu, P.mu, seed + 2);
  const ProjectableSection sigma = ProjectableSection::verticalSection([sigmaField](const Vector& x, const Vector& u) {
    Vector z(x.size() + u.size());
    z << x, u;
    return (*sigmaField)(z);
  });
  // holonomic fields: y_a^A = d_a u^A - Gamma_a^A
  auto field = [&, D](int n) {
    return DiscretizedSection::sample(GridSpec::periodicBox(P.r, n), P.mu, P.mu, [&](const Vector& x) {
      const Vector u = (*uField)(x);
      return std::pair{u, Matrix(uField->jacobian(x) - D.connection(x, u).transpose())};
    });
  };
  auto residuals = lazy<std::map<int, std::pair<DiscretizedSection, ResidualField>>>([&] {
    std::map<int, std::pair<DiscretizedSection, ResidualField>> m;
    for (int n : {P.n, 2 * P.n}) {
      DiscretizedSection phi = field(n);
      ResidualField rf = residualReport(FA, phi, 0.0);
      m.emplace(n, std::pair{std::move(phi), std::move(rf)});
    }
    return m;
  });
  auto firstVariation = [&](int n) {
    const DiscretizedSection& phi = residuals().at(n).first;
    std::vector<Vector> v;
    for (std::size_t k = 0; k < phi.nodeCount(); ++k)
      v.push_back(Vector::Constant(1, firstVariationIdentityDefect(FA, L, sigma, phi, k)));
    return v;
  };
  const double box = 2 * M_PI;

  ev["structure"] = [=] { return structureCheck(FA, seed + 3); };
  ev["admissibility"] = [&, box] {
    return convergenceStudy(out, "admissibility", P.n, box, [&](int n) {
      const ResidualField& rf = residuals().at(n).second;
      return std::pair{rf.admissibilityMax, rf.admissibilityL2};
    });
  };
  ev["morphism_convergence"] = [&, box] {
    return convergenceStudy(out, "morphism_convergence", P.n, box, [&](int n) {
      const ResidualField& rf = residuals().at(n).second;
      return std::pair{rf.morphismMax, rf.morphismL2};
    });
  };
  ev["first_variation"] = [&, box] {
    return convergenceStudy(out, "first_variation", P.n, box, [&](int n) {
      return norms(residuals().at(n).first.grid(), firstVariation(n));
    });
  };
  // evaluate eagerly so the lambdas above never outlive this frame
  Evaluators done;
  for (auto& [name, fn] : ev) {
    if (!wants(checks, name)) continue;
    Measured m = fn();
    done[name] = [m] { return m; };
  }
  ev = done;

  const auto& [phi, rf] = residuals().at(P.n);
  CsvTable t{"residuals.csv", {"node"}, {}};
  append(t.columns, indexedColumns("x_", P.r));
  for (int a = 1; a <= P.r; ++a)
    for (int A = 1; A <= P.mu; ++A) t.columns.push_back("adm_" + std::to_string(A) + "_" + std::to_string(a));
  append(t.columns, morphismColumns(P.r, P.mu));
  t.columns.push_back("first_variation");
  const std::vector<Vector> fv = firstVariation(P.n);
  for (std::size_t k = 0; k < phi.nodeCount(); ++k) {
    std::vector<double> row{static_cast<double>(k)};
    const Vector x = phi.grid().coordinates(k);
    row.insert(row.end(), x.begin(), x.end());
    const auto kk = static_cast<Eigen::Index>(k);
    for (Eigen::Index i = 0; i < rf.admissibility.rows(); ++i) row.push_back(rf.admissibility(i, kk));
    for (Eigen::Index i = 0; i < rf.morphism.rows(); ++i) row.push_back(rf.morphism(i, kk));
    row.push_back(fv[k](0));
    t.rows.push_back(std::move(row));
  }
  out.tables.push_back(std::move(t));
}

// ------------------------------------------------------------ mechanics

/// Invariants in extended precision on the compensated state.
struct Invariants {
  long double energy = 0;
  long double casimir = 0;
  long double sphere = 0;
};

long double component(const Vector& v, const Vector& low, Eigen::Index i) {
  return static_cast<long double>(v(i)) + (low.size() == v.size() ? static_cast<long double>(low(i)) : 0.0L);
}

Invariants invariants(const MechanicsParams& P, const MechanicsState& s) {
  Invariants out;
  for (Eigen::Index a = 0; a < s.y.size(); ++a) {
    const long double y = component(s.y, s.yLow, a), I = P.inertia(a);
    out.energy += I * y * y / 2;
    if (s.u.size() == s.y.size()) {
      const long double u = component(s.u, s.uLow, a);
      out.casimir += u * I * y;
      out.sphere += u * u;
      if (P.gravity.size() == s.u.size()) out.energy += P.gravity(a) * u;
    } else {
      out.casimir += I * I * y * y;
    }
  }
  return out;
}

double relativeDrift(const std::vector<long double>& values) {
  const long double v0 = values.front();
  const long double scale = v0 != 0 ? std::fabs(v0) : 1.0L;
  long double worst = 0;
  for (long double v : values) worst = std::max(worst, std::fabs(v - v0) / scale);
  return static_cast<double>(worst);
}

std::pair<double, double> energyCasimirDrift(const MechanicsParams& P, const MechanicsTrajectory& traj) {
  std::vector<long double> e, c;
  for (const auto& s : traj.states) {
    const Invariants i = invariants(P, s);
    e.push_back(i.energy);
    c.push_back(i.casimir);
  }
  return {relativeDrift(e), relativeDrift(c)};
}

void mechanicsTable(Output& out, const MechanicsTrajectory& traj, const MechanicsParams& P, bool withInvariants) {
  const int mu = static_cast<int>(traj.states.front().u.size()), mk = static_cast<int>(traj.states.front().y.size());
  CsvTable t{"trajectory.csv", {"t"}, {}};
  append(t.columns, indexedColumns("u_", mu));
  append(t.columns, indexedColumns("y_", mk));
  if (withInvariants) append(t.columns, {"energy", "casimir"});
  t.columns.push_back("el_residual");
  for (std::size_t n = 0; n < traj.states.size(); ++n) {
    const MechanicsState& s = traj.states[n];
    std::vector<double> row{s.t};
    row.insert(row.end(), s.u.begin(), s.u.end());
    row.insert(row.end(), s.y.begin(), s.y.end());
    if (withInvariants) {
      const Invariants i = invariants(P, s);
      row.push_back(static_cast<double>(i.energy));
      row.push_back(static_cast<double>(i.casimir));
    }
    row.push_back(traj.elResidual[n]);
    t.rows.push_back(std::move(row));
  }
  out.tables.push_back(std::move(t));
}

Measured maxResidual(const MechanicsTrajectory& traj) {
  Measured m;
  m.maxNorm = *std::max_element(traj.elResidual.begin(), traj.elResidual.end());
  return m;
}

Measured scalar(double v) {
  Measured m;
  m.maxNorm = v;
  return m;
}

void runMechanics(const MechanicsParams& P, const std::string& kind, std::uint64_t seed,
                  const std::vector<CheckSpec>& checks, Evaluators& ev, Output& out) {
  TimeDependentData D = kind == "rigid_body" ? rigidBodyData() : kind == "heavy_top" ? heavyTopData()
                                                                                     : freeParticleData(static_cast<int>(P.u0.size()));
  const FibredAlgebroidPair FA = builderTimeDependent(D);
  const Potential V = kind == "heavy_top" ? Potential::linear(P.gravity) : Potential::zero();
  const Lagrangian L = quadraticLagrangian(P.inertia, static_cast<int>(P.u0.size()), V);
  const MechanicsState s0{0.0, P.u0, P.y0, {}, {}};
  const MechanicsTrajectory traj = integrateMechanics(FA, L, s0, P.tEnd, P.dt);
  const auto drift = energyCasimirDrift(P, traj);

  ev["structure"] = [FA, seed] { return structureCheck(FA, seed + 3); };
  ev["energy_drift"] = [drift] { return scalar(drift.first); };
  ev["casimir_drift"] = [drift] { return scalar(drift.second); };
  ev["el_residual"] = [traj] { return maxResidual(traj); };
  if (wants(checks, "drift_ratio")) {
    const auto half = energyCasimirDrift(P, integrateMechanics(FA, L, s0, P.tEnd, P.dt / 2));
    Measured m;
    m.maxNorm = half.first;
    m.ratios = {{"energy", drift.first / half.first}, {"casimir", drift.second / half.second}};
    ev["drift_ratio"] = [m] { return m; };
    out.convergence.push_back(
        {{"check", "drift_ratio"},
         {"parameter", "dt"},
         {"rows", Json::array({{{"step", P.dt}, {"energy_drift", drift.first}, {"casimir_drift", drift.second}},
                               {{"step", P.dt / 2}, {"energy_drift", half.first}, {"casimir_drift", half.second}}})}});
  }
  if (kind == "heavy_top") {
    std::vector<long double> sphere;
    for (const auto& s : traj.states) sphere.push_back(invariants(P, s).sphere);
    const double sd = relativeDrift(sphere);
    ev["sphere_drift"] = [sd] { return scalar(sd); };
    if (P.axis) {
      const int axis = *P.axis;
      const ProjectableSection sigma = ProjectableSection::verticalSection(
          [axis](const Vector&, const Vector&) { return Vector(Vector::Unit(3, axis)); });
      const double J0 = noetherCurrent(FA, L, sigma, mechanicsJet(s0))(0);
      double worst = 0, invariance = 0;
      for (const auto& s : traj.states) {
        worst = std::max(worst, std::abs(noetherCurrent(FA, L, sigma, mechanicsJet(s))(0) - J0));
        invariance = std::max(invariance, std::abs(invarianceDefect(FA, L, sigma, mechanicsJet(s))));
      }
      Measured m = scalar(worst);
      m.extra["invariance_defect"] = invariance;
      ev["noether_drift"] = [m] { return m; };
    }
  }
  if (kind == "free_particle") {
    double worst = 0;
    for (const auto& s : traj.states)
      worst = std::max(worst, std::max((s.u - (P.u0 + s.t * P.y0)).cwiseAbs().maxCoeff(), (s.y - P.y0).cwiseAbs().maxCoeff()));
    ev["exact_solution"] = [worst] { return scalar(worst); };
  }
  mechanicsTable(out, traj, P, kind != "free_particle");
}

// ------------------------------------------------------------ Chern-Simons

MatrixGauge abelianGauge(int m, std::uint64_t seed, double amplitude) {
  // y_a^alpha = d_a f^alpha, represented by diagonal exponentials of i f
  FourierField::Options opts;
  opts.amplitude = amplitude;
  auto f = std::make_shared<FourierField>(3, m, seed, opts);
  MatrixGauge g;
  g.element = [f, m](const Vector& x) {
    const Vector v = (*f)(x);
    CMatrix e = CMatrix::Zero(m, m);
    for (int a = 0; a < m; ++a) e(a, a) = std::exp(std::complex<double>(0, v(a)));
    return e;
  };
  return g;
}

std::vector<CMatrix> abelianBasis(int m) {
  std::vector<CMatrix> b;
  for (int a = 0; a < m; ++a) {
    CMatrix e = CMatrix::Zero(m, m);
    e(a, a) = std::complex<double>(0, 1);
    b.push_back(e);
  }
  return b;
}

struct CsField {
  DiscretizedSection phi;
  std::vector<Vector> morphism;  // per node, rows alpha + m_k p
  std::vector<Vector> el;
};

void runChernSimons(const ChernSimonsParams& P, std::uint64_t seed, const std::vector<CheckSpec>& checks, Evaluators& ev,
                    Output& out) {
  const ChernSimonsData D{P.algebra.constants(), P.metric};
  const auto [FA, L] = builderChernSimons(D);
  const int m = P.algebra.dim;
  const bool so3 = P.algebra.type == "so3";
  const MatrixGauge gauge = so3 ? su2FourierGauge(seed, P.amplitude) : abelianGauge(m, seed, P.amplitude);
  const std::vector<CMatrix> basis = so3 ? su2Basis() : abelianBasis(m);
  const auto pairs = basePairs(3);
  auto flatField = [&](int n) {
    CsField f{flatConnectionGenerator(gauge, basis, GridSpec::periodicBox(3, n)), {}, {}};
    for (std::size_t k = 0; k < f.phi.nodeCount(); ++k) {
      const Array M = morphismResidual(FA, f.phi, k);
      Vector v(m * static_cast<int>(pairs.size()));
      for (std::size_t p = 0; p < pairs.size(); ++p)
        for (int al = 0; al < m; ++al) v(al + m * static_cast<int>(p)) = M(pairs[p].first, pairs[p].second, al);
      f.morphism.push_back(v);
      f.el.push_back(elResidual(FA, L, f.phi, k));
    }
    return f;
  };
  const CsField base = flatField(P.n);
  const double box = 2 * M_PI;

  ev["structure"] = [FA, seed] { return structureCheck(FA, seed + 3); };
  if (wants(checks, "morphism_convergence")) {
    const CsField fine = flatField(2 * P.n);
    const Measured mm = convergenceStudy(out, "morphism_convergence", P.n, box, [&](int n) {
      const CsField& f = n == P.n ? base : fine;
      return norms(f.phi.grid(), f.morphism);
    });
    ev["morphism_convergence"] = [mm] { return mm; };
  }
  {
    const double el = norms(base.phi.grid(), base.el).first;
    const double mm = norms(base.phi.grid(), base.morphism).first;
    // kappa = 3 max_alpha sum |C_{alpha beta gamma}| max |y|
    const Array Cl = D.loweredConstants();
    double cmax = 0;
    for (int a = 0; a < m; ++a) {
      double s = 0;
      for (int b = 0; b < m; ++b)
        for (int c = 0; c < m; ++c) s += std::abs(Cl(a, b, c));
      cmax = std::max(cmax, s);
    }
    const double kappa = 3 * cmax * base.phi.yData().cwiseAbs().maxCoeff();
    Measured r;
    r.maxNorm = kappa * mm > 0 ? el / (kappa * mm) : (el > 0 ? std::numeric_limits<double>::infinity() : 0.0);
    r.extra = {{"el_max", el}, {"morphism_max", mm}, {"kappa", kappa}};
    ev["el_bound"] = [r] { return r; };
  }
  if (wants(checks, "lagrangian_difference")) {
    auto f = std::make_shared<FourierField>(3, 3 * m, seed + 4);
    const DiscretizedSection random = DiscretizedSection::sample(GridSpec::periodicBox(3, P.n), 0, m, [&](const Vector& x) {
      return std::pair{Vector(0), Matrix((*f)(x).reshaped(m, 3))};
    });
    std::vector<Vector> d;
    for (std::size_t k = 0; k < random.nodeCount(); ++k)
      d.push_back(Vector::Constant(1, chernSimonsLagrangianDifference(D, random, k)));
    const auto [mx, l2] = norms(random.grid(), d);
    Measured r;
    r.maxNorm = mx;
    r.l2 = l2;
    ev["lagrangian_difference"] = [r] { return r; };
  }

  CsvTable t{"residuals.csv", {"node"}, {}};
  append(t.columns, indexedColumns("x_", 3));
  append(t.columns, morphismColumns(3, m));
  append(t.columns, indexedColumns("el_", m));
  t.columns.push_back("coupling");
  for (std::size_t k = 0; k < base.phi.nodeCount(); ++k) {
    std::vector<double> row{static_cast<double>(k)};
    const Vector x = base.phi.grid().coordinates(k);
    row.insert(row.end(), x.begin(), x.end());
    row.insert(row.end(), base.morphism[k].begin(), base.morphism[k].end());
    row.insert(row.end(), base.el[k].begin(), base.el[k].end());
    row.push_back(chernSimonsDensities(D, base.phi, k).coupling);
    t.rows.push_back(std::move(row));
  }
  out.tables.push_back(std::move(t));
}

// ------------------------------------------------------------ Atiyah

void runAtiyah(const AtiyahParams& P, std::uint64_t seed, const std::vector<CheckSpec>& checks, Evaluators& ev, Output& out) {
  const FibredAlgebroidPair FA = builderAtiyah({P.r, so3Constants<double>(), {}});
  ev["structure"] = [FA, seed] { return structureCheck(FA, seed + 3); };
  if (P.r == 1) {
    const Lagrangian L = quadraticLagrangian(P.mech.inertia, 0);
    const MechanicsState s0{0.0, Vector(0), P.mech.y0, {}, {}};
    const MechanicsTrajectory a = integrateMechanics(FA, L, s0, P.mech.tEnd, P.mech.dt);
    const MechanicsTrajectory b = integrateMechanics(builderTimeDependent(rigidBodyData()), L, s0, P.mech.tEnd, P.mech.dt);
    double worst = 0;
    for (std::size_t n = 0; n < a.states.size(); ++n)
      worst = std::max(worst, (a.states[n].y - b.states[n].y).cwiseAbs().maxCoeff());
    ev["reduction"] = [worst] { return scalar(worst); };
    mechanicsTable(out, a, P.mech, true);
    return;
  }
  const MatrixGauge gauge = su2FourierGauge(seed, P.amplitude);
  auto residuals = [&](int n) {
    const DiscretizedSection phi = flatConnectionGenerator(gauge, su2Basis(), GridSpec::periodicBox(3, n));
    return std::pair{phi, residualReport(FA, phi, 0.0)};
  };
  const auto base = residuals(P.n);
  if (wants(checks, "morphism_convergence")) {
    const auto fine = residuals(2 * P.n);
    const Measured mm = convergenceStudy(out, "morphism_convergence", P.n, 2 * M_PI, [&](int n) {
      const ResidualField& rf = n == P.n ? base.second : fine.second;
      return std::pair{rf.morphismMax, rf.morphismL2};
    });
    ev["morphism_convergence"] = [mm] { return mm; };
  }
  CsvTable t{"residuals.csv", {"node"}, {}};
  append(t.columns, indexedColumns("x_", 3));
  append(t.columns, morphismColumns(3, 3));
  for (std::size_t k = 0; k < base.first.nodeCount(); ++k) {
    std::vector<double> row{static_cast<double>(k)};
    const Vector x = base.first.grid().coordinates(k);
    row.insert(row.end(), x.begin(), x.end());
    const auto col = base.second.morphism.col(static_cast<Eigen::Index>(k));
    row.insert(row.end(), col.begin(), col.end());
    t.rows.push_back(std::move(row));
  }
  out.tables.push_back(std::move(t));
}

Json nullable(std::optional<double> v) { return v && std::isfinite(*v) ? Json(*v) : Json(nullptr); }
Json finiteOrNull(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

// ------------------------------------------------------------ public API

Json loadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config: invalid JSON in '" + path.string() + "': " + e.what());
  }
}

void applyOverride(Json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' must look like key=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  Json* node = &config;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) {
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    path.push_back(part);
  }
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (!node->is_object()) throw ConfigError("override key '" + key + "' does not name an object member");
    node = &(*node)[path[i]];
  }
  *node = value;
}

void validateConfig(const Json& config) {
  const auto [kind, checks] = parseCommon(config);
  validateKind(Reader(config, ""), kind, checks);
}

RunResult runScenario(const Json& config, std::optional<std::uint64_t> seedOverride) {
  const auto [kind, checks] = parseCommon(config);
  const Reader root(config, "");
  validateKind(root, kind, checks);
  const std::uint64_t seed = seedOverride ? *seedOverride : config.value("seed", std::uint64_t{1});

  Evaluators ev;
  Output out;
  if (kind == "standard")
    runStandard(parseStandard(root), seed, checks, ev, out);
  else if (kind == "chern_simons")
    runChernSimons(parseChernSimons(root), seed, checks, ev, out);
  else if (kind == "atiyah")
    runAtiyah(parseAtiyah(root), seed, checks, ev, out);
  else
    runMechanics(parseMechanics(root, kind), kind, seed, checks, ev, out);

  RunResult result;
  Json list = Json::array();
  int failures = 0;
  for (const CheckSpec& c : checks) {
    const Measured m = ev.at(c.name)();
    bool ok = !std::isnan(m.maxNorm) && (!c.tol || m.maxNorm <= *c.tol);
    if (c.ratio)
      for (const auto& [name, r] : m.ratios) ok = ok && r >= c.ratio->first && r <= c.ratio->second;
    Json ratios = Json::object();
    for (const auto& [name, r] : m.ratios) ratios[name] = finiteOrNull(r);
    Json entry = {{"name", c.name},
                  {"max_norm", finiteOrNull(m.maxNorm)},
                  {"l2_norm", nullable(m.l2)},
                  {"tolerance", nullable(c.tol)},
                  {"ratios", m.ratios.empty() ? Json(nullptr) : ratios},
                  {"ratio_range", c.ratio ? Json::array({c.ratio->first, c.ratio->second}) : Json(nullptr)},
                  {"passed", ok}};
    if (!m.extra.empty()) entry["extra"] = m.extra;
    list.push_back(entry);
    failures += ok ? 0 : 1;
  }
  result.report = {{"schema", kConfigSchema},
                   {"scenario", config.at("id")},
                   {"kind", kind},
                   {"seed", seed},
                   {"checks", list},
                   {"convergence", out.convergence},
                   {"failures", failures},
                   {"passed", failures == 0}};
  result.tables = std::move(out.tables);
  result.passed = failures == 0;
  return result;
}

void writeCsv(std::ostream& os, const CsvTable& table) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
  os << '\n';
  char buf[32];
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", row[i]);
      os << (i ? "," : "") << buf;
    }
    os << '\n';
  }
}

void writeArtifacts(const RunResult& result, double wallSeconds, const std::filesystem::path& outDir) {
  std::error_code ec;
  std::filesystem::create_directories(outDir, ec);
  if (ec) throw IoError("cannot create output directory '" + outDir.string() + "': " + ec.message());
  auto write = [&](const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ofstream os(outDir / name);
    if (!os) throw IoError("cannot write '" + (outDir / name).string() + "'");
    body(os);
    os.flush();
    if (!os) throw IoError("write failed for '" + (outDir / name).string() + "'");
  };
  write("report.json", [&](std::ostream& os) { os << result.report.dump(2) << '\n'; });
  write("timing.json", [&](std::ostream& os) { os << Json{{"wall_time_s", wallSeconds}}.dump(2) << '\n'; });
  for (const CsvTable& t : result.tables) write(t.name, [&](std::ostream& os) { writeCsv(os, t); });
}

std::vector<std::string> scenarioKinds() {
  std::vector<std::string> kinds;
  for (const auto& [k, v] : checkTables()) kinds.push_back(k);
  return kinds;
}

std::string scenarioCatalog() {
  std::ostringstream os;
  os << "Scenario kinds (config \"kind\"), parameters with defaults, and checks:\n\n"
     << "standard       nonlinear connection on N x R^m_u, holonomic fields y = du - Gamma\n"
     << "  r [2], m_u [2], connection {type: fourier (amplitude 0.5) | zero | linear (K: r matrices)},\n"
     << "  lagrangian {type: quadratic, weights [ones m_u x r], potential}, grid {n [32]}\n"
     << "  checks: structure, admissibility*, morphism_convergence*, first_variation*\n"
     << "rigid_body     so(3) Euler-Poincare, L = 1/2 sum I y^2\n"
     << "  inertia [1,2,3], y0 [1,1,1], dt [1e-3], t_end [10]\n"
     << "  checks: structure, energy_drift, casimir_drift, drift_ratio*, el_residual\n"
     << "heavy_top      so(3) acting on the gravity direction u, L = 1/2 sum I y^2 - gravity . u\n"
     << "  inertia [1,2,3], gravity [0,0,1], u0 [0,0,1], y0 [1,1,1], symmetry_axis (1-3), dt [1e-3], t_end [10]\n"
     << "  checks: structure, energy_drift, casimir_drift, sphere_drift, noether_drift, el_residual\n"
     << "free_particle  abelian R^m translating u, L = 1/2 sum m y^2\n"
     << "  u0, y0 (required, length m), masses [ones], dt [1e-3], t_end [10]\n"
     << "  checks: structure, exact_solution\n"
     << "chern_simons   TN x g over a periodic 3-box, L = C_{abc} y_1^a y_2^b y_3^c\n"
     << "  algebra {type: so3 | abelian (dim)}, metric [identity], gauge {type, amplitude [1]}, grid {n [16]}\n"
     << "  checks: structure, morphism_convergence*, el_bound, lagrangian_difference\n"
     << "atiyah         flat Atiyah algebroid TN x so(3)\n"
     << "  r [3] (1: reduction to the rigid body, 3: pure-gauge fields), algebra {type: so3},\n"
     << "  inertia, y0, dt [1e-2], t_end [1], gauge {type: su2_fourier, amplitude [1]}, grid {n [16]}\n"
     << "  checks: structure, reduction (r = 1), morphism_convergence* (r = 3)\n\n"
     << "Checks marked * measure a convergence ratio (grid n vs 2n, or dt vs dt/2) and accept\n"
     << "\"ratio\": [lo, hi]; every check accepts \"tol\" on its max-norm value.\n\n"
     << "Lagrangian catalog: quadratic (weights W, L = 1/2 sum W y^2 - V(u)) with potentials\n"
     << "  zero, harmonic (mass_sq), linear (c); chern_simons (fixed by the algebra and metric).\n"
     << "Gauge catalog: su2_fourier (g = exp(f . tau), f seeded periodic Fourier field),\n"
     << "  gradient_fourier (abelian, y = df with f seeded).\n";
  return os.str();
}

}  // namespace algebroid
