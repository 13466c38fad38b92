#include "pfsmc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "pfsmc/errors.hpp"
#include "toml.hpp"

namespace pfsmc {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void bad(const std::string& key, const std::string& msg) { throw ConfigError(key + ": " + msg); }

void check_keys(const toml::table& t, const std::string& where, std::initializer_list<std::string_view> allowed) {
  for (const auto& [k, _] : t) {
    bool ok = false;
    for (auto a : allowed) ok = ok || k.str() == a;
    if (!ok) bad(where.empty() ? std::string(k.str()) : where + "." + std::string(k.str()), "unknown key");
  }
}

const toml::table* section(const toml::table& root, const char* name) {
  const auto* node = root.get(name);
  if (!node) return nullptr;
  if (!node->is_table()) bad(name, "expected a table");
  return node->as_table();
}

std::optional<double> number(const toml::table* t, const std::string& where, const char* key) {
  if (!t) return std::nullopt;
  const auto* n = t->get(key);
  if (!n) return std::nullopt;
  if (auto v = n->value<double>()) return *v;
  bad(where + "." + key, "expected a number");
}

std::optional<std::string> string(const toml::table* t, const std::string& where, const char* key) {
  if (!t) return std::nullopt;
  const auto* n = t->get(key);
  if (!n) return std::nullopt;
  if (auto v = n->value<std::string>()) return *v;
  bad(where + "." + key, "expected a string");
}

std::optional<bool> boolean(const toml::table* t, const std::string& where, const char* key) {
  if (!t) return std::nullopt;
  const auto* n = t->get(key);
  if (!n) return std::nullopt;
  if (auto v = n->value<bool>()) return *v;
  bad(where + "." + key, "expected true or false");
}

std::optional<std::int64_t> integer(const toml::table* t, const std::string& where, const char* key) {
  if (!t) return std::nullopt;
  const auto* n = t->get(key);
  if (!n) return std::nullopt;
  if (auto v = n->value_exact<std::int64_t>()) return *v;
  bad(where + "." + key, "expected an integer");
}

std::vector<double> number_list(const toml::table* t, const std::string& where, const char* key) {
  std::vector<double> out;
  if (!t) return out;
  const auto* n = t->get(key);
  if (!n) return out;
  if (auto v = n->value<double>()) return {*v};
  const auto* arr = n->as_array();
  if (!arr) bad(where + "." + key, "expected a number or an array of numbers");
  for (const auto& e : *arr) {
    auto v = e.value<double>();
    if (!v) bad(where + "." + key, "expected numbers");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::size_t> count_list(const toml::table* t, const std::string& where, const char* key) {
  std::vector<std::size_t> out;
  for (double v : number_list(t, where, key)) {
    if (!(v >= 0.0) || v != std::floor(v)) bad(where + "." + key, "expected non-negative integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

void read_field_source(const toml::table* data, const char* key, FieldSource& out, const fs::path& base) {
  if (auto e = string(data, "data", key)) out.expr = *e;
  const std::string file_key = std::string(key) + "_file";
  if (auto f = string(data, "data", file_key.c_str())) out.file = (base / *f).lexically_normal().string();
}

std::string preset(const std::string& expr) { return expr == "zero" ? "0" : expr; }

Field field_from_source(const FieldSource& src, const Mesh& mesh, const std::string& key) {
  std::vector<double> v(mesh.size());
  if (!src.file.empty()) {
    std::ifstream in(src.file);
    if (!in) bad(key + "_file", "cannot open '" + src.file + "'");
    try {
      return read_field_csv(in, mesh);
    } catch (const std::exception& e) {
      bad(key + "_file", e.what());
    }
  }
  Expression ex = [&] {
    try {
      return Expression::parse(preset(src.expr));
    } catch (const std::exception& e) {
      bad(key, e.what());
    }
  }();
  if (ex.depends_on_time()) bad(key, "must not depend on t");
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto x = mesh.coords(i);
    v[i] = ex(x[0], x[1], x[2], 0.0);
    if (!std::isfinite(v[i])) bad(key, "not finite at node " + std::to_string(i));
  }
  return Field(mesh, std::move(v));
}

void fill(RunConfig& c, const toml::table& root) {
  check_keys(root, "", {"name", "seed", "mesh", "physics", "potential", "problem", "data", "time", "tolerances",
                        "bounds", "output", "sweep"});
  if (auto v = string(&root, "", "name")) c.name = *v;
  if (auto v = integer(&root, "", "seed")) {
    if (*v < 0) bad("seed", "must be non-negative");
    c.seed = static_cast<std::uint64_t>(*v);
  }

  if (const auto* t = section(root, "mesh")) {
    check_keys(*t, "mesh", {"lengths", "nodes"});
    if (t->get("lengths")) c.lengths = number_list(t, "mesh", "lengths");
    if (t->get("nodes")) c.nodes = count_list(t, "mesh", "nodes");
  }

  if (const auto* t = section(root, "physics")) {
    check_keys(*t, "physics", {"ell", "kappa", "nu", "gamma"});
    if (auto v = number(t, "physics", "ell")) c.physics.ell = *v;
    if (auto v = number(t, "physics", "kappa")) c.physics.kappa = *v;
    if (auto v = number(t, "physics", "nu")) c.physics.nu = *v;
    if (auto v = number(t, "physics", "gamma")) c.physics.gamma = *v;
  }

  const auto* pot = section(root, "potential");
  const auto kind = string(pot, "potential", "kind");
  if (!kind) bad("potential.kind", "missing; allowed kinds: regular, logarithmic, obstacle");
  check_keys(*pot, "potential", {"kind", "c0"});
  try {
    c.potential = parse_potential_kind(*kind);
  } catch (const std::exception& e) {
    bad("potential.kind", e.what());
  }
  c.c0 = number(pot, "potential", "c0");

  const auto* prob = section(root, "problem");
  check_keys(prob ? *prob : toml::table{}, "problem",
             {"variant", "alpha", "target", "target_file", "rho", "rho_multiple", "pilot_rho", "eps", "mode"});
  if (auto v = string(prob, "problem", "variant")) {
    if (v->size() != 1 || std::string("ABCabc").find((*v)[0]) == std::string::npos)
      bad("problem.variant", "expected A, B or C");
    c.variant = static_cast<char>(std::toupper(static_cast<unsigned char>((*v)[0])));
  }
  c.alpha = number(prob, "problem", "alpha");
  if (auto v = string(prob, "problem", "target")) c.target.expr = *v;
  if (auto v = string(prob, "problem", "target_file"))
    c.target.file = (c.base_dir / *v).lexically_normal().string();
  c.rho = number(prob, "problem", "rho");
  c.rho_multiple = number(prob, "problem", "rho_multiple");
  if (!c.rho && !c.rho_multiple) c.rho_multiple = 2.0;
  if (auto v = number(prob, "problem", "pilot_rho")) c.pilot_rho = *v;
  if (auto v = number(prob, "problem", "eps")) c.eps = *v;
  if (auto v = string(prob, "problem", "mode")) {
    if (*v == "prox")
      c.mode = StepMode::Prox;
    else if (*v == "regularized")
      c.mode = StepMode::Regularized;
    else
      bad("problem.mode", "expected prox or regularized");
  }

  if (const auto* t = section(root, "data")) {
    check_keys(*t, "data", {"theta0", "phi0", "source", "theta0_file", "phi0_file"});
    read_field_source(t, "theta0", c.theta0, c.base_dir);
    read_field_source(t, "phi0", c.phi0, c.base_dir);
    if (auto v = string(t, "data", "source")) c.source = *v;
  }

  if (const auto* t = section(root, "time")) {
    check_keys(*t, "time", {"T", "dt", "sample_every"});
    if (auto v = number(t, "time", "T")) c.T = *v;
    if (auto v = number(t, "time", "dt")) c.dt = *v;
    if (auto v = integer(t, "time", "sample_every")) {
      if (*v < 1) bad("time.sample_every", "must be at least 1");
      c.sample_every = static_cast<std::size_t>(*v);
    }
  }

  if (const auto* t = section(root, "tolerances")) {
    check_keys(*t, "tolerances", {"extinction", "comparison", "reinforced_monotone"});
    if (auto v = number(t, "tolerances", "extinction")) c.extinction_tol = *v;
    if (auto v = number(t, "tolerances", "comparison")) c.comparison_tol = *v;
    if (auto v = boolean(t, "tolerances", "reinforced_monotone")) c.reinforced_monotone = *v;
  }

  if (const auto* t = section(root, "bounds")) {
    check_keys(*t, "bounds", {"c_omega", "c_omega_samples"});
    c.c_omega = number(t, "bounds", "c_omega");
    if (auto v = integer(t, "bounds", "c_omega_samples")) {
      if (*v < 1) bad("bounds.c_omega_samples", "must be at least 1");
      c.c_omega_samples = static_cast<std::size_t>(*v);
    }
  }

  if (const auto* t = section(root, "output")) {
    check_keys(*t, "output", {"dir", "snapshots"});
    if (auto v = string(t, "output", "dir")) c.output_dir = *v;
    if (auto v = boolean(t, "output", "snapshots")) c.snapshots = *v;
  }

  if (const auto* t = section(root, "sweep")) {
    check_keys(*t, "sweep", {"rho", "rho_multiples", "eps", "nodes"});
    c.sweep.rho = number_list(t, "sweep", "rho");
    c.sweep.rho_multiples = number_list(t, "sweep", "rho_multiples");
    c.sweep.eps = number_list(t, "sweep", "eps");
    c.sweep.nodes = count_list(t, "sweep", "nodes");
  }
}

void positive(double v, const std::string& key) {
  if (!(v > 0.0) || !std::isfinite(v)) bad(key, "must be positive and finite");
}

}  // namespace

double RunConfig::c0_value() const {
  if (c0) return *c0;
  return potential == PotentialKind::Logarithmic ? 2.0 : 1.0;
}

void RunConfig::validate() const {
  if (name.empty() || name.find_first_of("/\\") != std::string::npos) bad("name", "must be a non-empty plain name");
  if (lengths.empty() || lengths.size() > 3) bad("mesh.lengths", "expected 1 to 3 entries");
  if (nodes.size() != lengths.size()) bad("mesh.nodes", "must have as many entries as mesh.lengths");
  for (double l : lengths) positive(l, "mesh.lengths");
  for (auto n : nodes)
    if (n < 3) bad("mesh.nodes", "need at least 3 nodes per axis");
  try {
    physics.validate();
  } catch (const std::exception& e) {
    bad("physics", e.what());
  }
  try {
    (void)Potential::make(potential, c0_value());
  } catch (const std::exception& e) {
    bad("potential.c0", e.what());
  }
  if (alpha && !std::isfinite(*alpha)) bad("problem.alpha", "must be finite");
  if (rho && rho_multiple) bad("rho", "set either problem.rho or problem.rho_multiple, not both");
  if (rho) positive(*rho, "rho");
  if (rho_multiple) positive(*rho_multiple, "rho_multiple");
  positive(pilot_rho, "pilot_rho");
  positive(eps, "eps");
  positive(T, "time.T");
  positive(dt, "time.dt");
  if (dt > T) bad("time.dt", "must not exceed time.T");
  positive(extinction_tol, "tolerances.extinction");
  positive(comparison_tol, "tolerances.comparison");
  if (c_omega) positive(*c_omega, "bounds.c_omega");
  for (const auto* fsrc : {&theta0, &phi0, &target})
    if (!fsrc->file.empty() && !fs::exists(fsrc->file)) bad("file", "'" + fsrc->file + "' does not exist");
  for (double v : sweep.rho) positive(v, "sweep.rho");
  for (double v : sweep.rho_multiples) positive(v, "sweep.rho_multiples");
  for (double v : sweep.eps) positive(v, "sweep.eps");
  for (auto n : sweep.nodes)
    if (n < 3) bad("sweep.nodes", "need at least 3 nodes per axis");
}

RunConfig parse_config_string(const std::string& text, const fs::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  toml::table root;
  try {
    root = toml::parse(text, std::string_view("<config>"));
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "line " << e.source().begin.line << ", column " << e.source().begin.column << ": " << e.description();
    throw ConfigError(os.str());
  }
  fill(c, root);
  c.validate();
  // Build once so that expression and file errors surface at parse time.
  (void)build_spec(c, c.rho.value_or(c.pilot_rho));
  return c;
}

RunConfig parse_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    auto base = path.parent_path();
    return parse_config_string(ss.str(), base.empty() ? fs::path(".") : base);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string resolved_toml(const RunConfig& c) {
  toml::table root;
  root.insert("name", c.name);
  root.insert("seed", static_cast<std::int64_t>(c.seed));

  toml::array lengths, nodes;
  for (double l : c.lengths) lengths.push_back(l);
  for (auto n : c.nodes) nodes.push_back(static_cast<std::int64_t>(n));
  root.insert("mesh", toml::table{{"lengths", lengths}, {"nodes", nodes}});
  root.insert("physics", toml::table{{"ell", c.physics.ell},
                                     {"kappa", c.physics.kappa},
                                     {"nu", c.physics.nu},
                                     {"gamma", c.physics.gamma}});
  root.insert("potential", toml::table{{"kind", to_string(c.potential)}, {"c0", c.c0_value()}});

  toml::table prob{{"variant", std::string(1, c.variant)},
                   {"pilot_rho", c.pilot_rho},
                   {"eps", c.eps},
                   {"mode", c.mode == StepMode::Prox ? "prox" : "regularized"}};
  if (c.variant == 'A') prob.insert("alpha", c.alpha_value());
  if (c.target.file.empty())
    prob.insert("target", c.target.expr);
  else
    prob.insert("target_file", c.target.file);
  if (c.rho) prob.insert("rho", *c.rho);
  if (c.rho_multiple) prob.insert("rho_multiple", *c.rho_multiple);
  root.insert("problem", prob);

  toml::table data{{"source", c.source}};
  for (auto [key, src] : {std::pair{"theta0", &c.theta0}, std::pair{"phi0", &c.phi0}}) {
    if (src->file.empty())
      data.insert(key, src->expr);
    else
      data.insert(std::string(key) + "_file", src->file);
  }
  root.insert("data", data);
  root.insert("time", toml::table{{"T", c.T}, {"dt", c.dt}, {"sample_every", static_cast<std::int64_t>(c.sample_every)}});
  root.insert("tolerances", toml::table{{"extinction", c.extinction_tol},
                                        {"comparison", c.comparison_tol},
                                        {"reinforced_monotone", c.reinforced_monotone}});
  if (c.c_omega)
    root.insert("bounds", toml::table{{"c_omega", *c.c_omega}});
  else
    root.insert("bounds", toml::table{{"c_omega_samples", static_cast<std::int64_t>(c.c_omega_samples)}});
  root.insert("output", toml::table{{"dir", c.output_dir}, {"snapshots", c.snapshots}});

  if (!c.sweep.empty()) {
    auto list = [](const auto& v) {
      toml::array a;
      for (auto x : v) {
        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, std::size_t>)
          a.push_back(static_cast<std::int64_t>(x));
        else
          a.push_back(x);
      }
      return a;
    };
    root.insert("sweep", toml::table{{"rho", list(c.sweep.rho)},
                                     {"rho_multiples", list(c.sweep.rho_multiples)},
                                     {"eps", list(c.sweep.eps)},
                                     {"nodes", list(c.sweep.nodes)}});
  }

  std::ostringstream os;
  os << root << "\n";
  return os.str();
}

std::string config_hash(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.output_dir.clear();  // where a run is stored does not change what it computes
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : resolved_toml(c)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Mesh build_mesh(const RunConfig& c) { return Mesh(c.lengths, c.nodes); }

ProblemSpec build_spec(const RunConfig& c, double rho) {
  const Mesh mesh = build_mesh(c);
  ProblemSpec s;
  s.params = c.physics;
  s.rho = rho;
  s.eps = c.eps;
  s.potential = Potential::make(c.potential, c.c0_value());
  s.theta0 = field_from_source(c.theta0, mesh, "data.theta0");
  s.phi0 = field_from_source(c.phi0, mesh, "data.phi0");
  Field target = field_from_source(c.target, mesh, "problem.target");
  switch (c.variant) {
    case 'A': s.variant = VariantA{c.alpha_value(), target}; break;
    case 'B': s.variant = VariantB{target}; break;
    default: s.variant = VariantC{target}; break;
  }

  const std::string src = preset(c.source);
  Expression ex = [&] {
    try {
      return Expression::parse(src);
    } catch (const std::exception& e) {
      bad("data.source", e.what());
    }
  }();
  auto eval_at = [ex, mesh](double t) {
    return Field::from_function(mesh, [&](double x, double y, double z) { return ex(x, y, z, t); });
  };
  const Field f0 = [&] {
    try {
      return eval_at(0.0);
    } catch (const std::exception&) {
      bad("data.source", "not finite at t=0");
    }
  }();
  if (src != "0") {
    if (ex.depends_on_time())
      s.source = eval_at;
    else
      s.source = [f0](double) { return f0; };
  }

  try {
    s.validate();
  } catch (const std::exception& e) {
    bad("problem", e.what());
  }
  return s;
}

}  // namespace pfsmc
