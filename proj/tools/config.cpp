#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace difflab::cli {

namespace {

class Parser {
 public:
  explicit Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
    throw ConfigError(source_, n.Mark().line >= 0 ? n.Mark().line + 1 : 0, msg);
  }

  void expect_map(const YAML::Node& n, const std::string& what) const {
    if (!n.IsMap()) fail(n, what + " must be a mapping");
  }

  void allow_keys(const YAML::Node& n, const std::string& section, const std::set<std::string>& keys) const {
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      if (!keys.count(key)) fail(kv.first, "unknown key '" + key + "' in " + section);
    }
  }

  double number(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be a number");
    try {
      return n.as<double>();
    } catch (const YAML::Exception&) {
      fail(n, what + " must be a number");
    }
  }

  long long integer(const YAML::Node& n, const std::string& what) const {
    const double v = number(n, what);
    if (v != static_cast<double>(static_cast<long long>(v))) fail(n, what + " must be an integer");
    return static_cast<long long>(v);
  }

  std::string text(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be a string");
    return n.as<std::string>();
  }

  bool boolean(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be true or false");
    try {
      return n.as<bool>();
    } catch (const YAML::Exception&) {
      fail(n, what + " must be true or false");
    }
  }

  std::vector<double> numbers(const YAML::Node& n, const std::string& what) const {
    if (!n.IsSequence()) fail(n, what + " must be a list of numbers");
    std::vector<double> v;
    for (const auto& e : n) v.push_back(number(e, what));
    return v;
  }

  Potential potential(const YAML::Node& n, int dim) const {
    expect_map(n, "model.potential");
    allow_keys(n, "model.potential", {"kind", "coeff", "k"});
    const std::string kind = n["kind"] ? text(n["kind"], "potential.kind") : "zero";
    if (kind == "zero") return Potential::zero();
    if (kind == "linear") {
      if (!n["coeff"]) fail(n, "linear potential needs 'coeff'");
      const auto c = numbers(n["coeff"], "potential.coeff");
      if (static_cast<int>(c.size()) != dim) fail(n["coeff"], "potential.coeff must have one entry per dimension");
      Vec v(dim);
      for (int i = 0; i < dim; ++i) v[i] = c[i];
      return Potential::linear(v);
    }
    if (kind == "quadratic") {
      if (!n["k"]) fail(n, "quadratic potential needs 'k'");
      return Potential::quadratic(number(n["k"], "potential.k"));
    }
    fail(n["kind"], "unknown potential kind '" + kind + "'");
  }

  ManifoldModel model(const YAML::Node& n) const {
    expect_map(n, "model");
    allow_keys(n, "model", {"kind", "dimension", "radius", "a", "b", "potential"});
    const std::string kind = n["kind"] ? text(n["kind"], "model.kind") : "euclidean";
    const int dim = n["dimension"] ? static_cast<int>(integer(n["dimension"], "model.dimension")) : 1;
    if (dim < 1) fail(n["dimension"], "model.dimension must be >= 1");
    const Potential v = n["potential"] ? potential(n["potential"], dim) : Potential::zero();
    try {
      if (kind == "euclidean") return ManifoldModel::euclidean(dim, v);
      if (!v.is_zero() && kind != "interval") fail(n["potential"], "potentials are only supported on flat models");
      if (kind == "sphere") return ManifoldModel::sphere(dim, n["radius"] ? number(n["radius"], "model.radius") : 1.0);
      if (kind == "hyperbolic") return ManifoldModel::hyperbolic(dim);
      if (kind == "interval") {
        if (!n["a"] || !n["b"]) fail(n, "interval model needs 'a' and 'b'");
        return ManifoldModel::interval(number(n["a"], "model.a"), number(n["b"], "model.b"), v);
      }
    } catch (const std::invalid_argument& e) {
      fail(n, e.what());
    }
    fail(n["kind"], "unknown model kind '" + kind + "'");
  }

  DomainSpec domain(const YAML::Node& n, const ManifoldModel& m) const {
    expect_map(n, "domain");
    allow_keys(n, "domain", {"kind", "a", "b", "center", "radius"});
    if (!n["kind"]) fail(n, "domain needs 'kind'");
    const std::string kind = text(n["kind"], "domain.kind");
    DomainSpec d;
    if (kind == "interval") {
      if (!n["a"] || !n["b"]) fail(n, "interval domain needs 'a' and 'b'");
      d = DomainSpec::interval(number(n["a"], "domain.a"), number(n["b"], "domain.b"));
    } else if (kind == "ball" || kind == "spherical_cap") {
      if (!n["radius"]) fail(n, kind + " domain needs 'radius'");
      Point c = m.origin();
      if (n["center"]) {
        const auto v = numbers(n["center"], "domain.center");
        if (static_cast<int>(v.size()) != m.coords()) fail(n["center"], "domain.center has the wrong number of coordinates");
        for (std::size_t i = 0; i < v.size(); ++i) c[i] = v[i];
      }
      const double r = number(n["radius"], "domain.radius");
      d = kind == "ball" ? DomainSpec::ball(c, r) : DomainSpec::spherical_cap(c, r);
    } else {
      fail(n["kind"], "unknown domain kind '" + kind + "'");
    }
    try {
      d.validate(m);
    } catch (const std::invalid_argument& e) {
      fail(n, e.what());
    }
    return d;
  }

 private:
  std::string source_;
};

struct SimDefaults {
  std::optional<double> dt, n_paths, t_end;
};

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
  const Parser p(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source, e.mark.line >= 0 ? e.mark.line + 1 : 0, e.msg);
  }
  if (!root || root.IsNull()) throw ConfigError(source, 0, "empty configuration; nothing to run");
  p.expect_map(root, "configuration");
  p.allow_keys(root, "configuration", {"seed", "workers", "model", "domain", "sim", "checks", "output"});

  RunConfig cfg;
  if (root["seed"]) cfg.seed = static_cast<std::uint64_t>(p.integer(root["seed"], "seed"));
  if (root["workers"]) {
    cfg.workers = static_cast<int>(p.integer(root["workers"], "workers"));
    if (cfg.workers < 0) p.fail(root["workers"], "workers must be >= 0");
  }
  const ManifoldModel model = root["model"] ? p.model(root["model"]) : ManifoldModel::euclidean(1);
  std::optional<DomainSpec> domain;
  if (root["domain"]) domain = p.domain(root["domain"], model);

  SimDefaults sim;
  if (const auto s = root["sim"]) {
    p.expect_map(s, "sim");
    p.allow_keys(s, "sim", {"dt", "n_paths", "seed", "t_end"});
    if (s["dt"]) {
      sim.dt = p.number(s["dt"], "sim.dt");
      if (!(*sim.dt > 0)) p.fail(s["dt"], "sim.dt must be positive");
    }
    if (s["n_paths"]) {
      sim.n_paths = static_cast<double>(p.integer(s["n_paths"], "sim.n_paths"));
      if (*sim.n_paths < 1) p.fail(s["n_paths"], "sim.n_paths must be >= 1");
    }
    if (s["t_end"]) {
      sim.t_end = p.number(s["t_end"], "sim.t_end");
      if (!(*sim.t_end > 0)) p.fail(s["t_end"], "sim.t_end must be positive");
    }
    if (s["seed"]) {
      if (root["seed"]) p.fail(s["seed"], "seed given both at top level and in sim");
      cfg.seed = static_cast<std::uint64_t>(p.integer(s["seed"], "sim.seed"));
    }
  }

  if (const auto o = root["output"]) {
    p.expect_map(o, "output");
    p.allow_keys(o, "output", {"directory", "format", "timing"});
    if (o["directory"]) cfg.output_dir = p.text(o["directory"], "output.directory");
    if (o["format"]) {
      const auto f = p.text(o["format"], "output.format");
      if (f != "json" && f != "csv") p.fail(o["format"], "output.format must be json or csv");
      cfg.csv = f == "csv";
    }
    if (o["timing"]) cfg.timing = p.boolean(o["timing"], "output.timing");
  }

  const auto checks = root["checks"];
  if (!checks || checks.IsNull() || (checks.IsSequence() && checks.size() == 0))
    throw ConfigError(source, checks ? checks.Mark().line + 1 : 0, "nothing to run");
  if (!checks.IsSequence()) p.fail(checks, "checks must be a list");

  std::set<std::string> ids;
  for (const auto& c : checks) {
    CheckEntry e;
    e.spec.model = model;
    e.spec.domain = domain;
    std::string name;
    if (c.IsScalar()) {
      name = p.text(c, "check name");
    } else {
      p.expect_map(c, "check");
      p.allow_keys(c, "check", {"name", "id", "trials", "tolerance_sigma", "ranges", "params", "model", "domain"});
      if (!c["name"]) p.fail(c, "check needs 'name'");
      name = p.text(c["name"], "check name");
      if (c["model"]) {
        e.spec.model = p.model(c["model"]);
        e.spec.domain.reset();
      }
      if (c["domain"]) e.spec.domain = p.domain(c["domain"], e.spec.model);
      if (c["id"]) e.id = p.text(c["id"], "check id");
      if (c["trials"]) {
        const auto t = p.integer(c["trials"], "trials");
        if (t < 1) p.fail(c["trials"], "trials must be >= 1");
        e.spec.trial_count = static_cast<std::size_t>(t);
      }
      if (c["tolerance_sigma"]) e.spec.tolerance_sigma = p.number(c["tolerance_sigma"], "tolerance_sigma");
      if (const auto r = c["ranges"]) {
        p.expect_map(r, "ranges");
        p.allow_keys(r, "ranges", {"t", "delta", "alpha", "lambda"});
        for (const auto& kv : r) {
          const auto key = kv.first.as<std::string>();
          const auto v = p.numbers(kv.second, "ranges." + key);
          if (v.size() != 2) p.fail(kv.second, "ranges." + key + " must be [lo, hi]");
          e.spec.ranges[key] = {v[0], v[1]};
        }
      }
      if (const auto pr = c["params"]) {
        p.expect_map(pr, "params");
        for (const auto& kv : pr) e.spec.params[kv.first.as<std::string>()] = p.number(kv.second, "params value");
      }
    }
    try {
      e.spec.name = check_from_string(name);
    } catch (const std::invalid_argument& ex) {
      p.fail(c, ex.what());
    }
    if (sim.dt && !e.spec.params.count("dt")) e.spec.params["dt"] = *sim.dt;
    if (sim.n_paths) {
      if (!e.spec.params.count("n_paths")) e.spec.params["n_paths"] = *sim.n_paths;
      if (!e.spec.params.count("n_pairs")) e.spec.params["n_pairs"] = *sim.n_paths;
    }
    if (sim.t_end && !e.spec.params.count("t")) e.spec.params["t"] = *sim.t_end;
    e.spec.seed = cfg.seed;
    e.spec.timing = cfg.timing;
    try {
      e.spec.validate();
    } catch (const std::invalid_argument& ex) {
      p.fail(c, name + ": " + ex.what());
    }
    if (e.id.empty()) {
      e.id = name;
      for (int k = 2; ids.count(e.id); ++k) e.id = name + "_" + std::to_string(k);
    }
    if (!ids.insert(e.id).second) p.fail(c, "duplicate check id '" + e.id + "'");
    cfg.checks.push_back(std::move(e));
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot read configuration file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace difflab::cli
