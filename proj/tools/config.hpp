#pragma once

#include "lpq/inflation.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace lpqcli {

using namespace lpq;

inline constexpr const char* kConfigSchema = "lpq-experiment/1";

struct SchemaError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

inline std::string line_of(const YAML::Node& n)
{
  const auto m = n.Mark();
  if (m.line < 0)
    return "";
  return " (line " + std::to_string(m.line + 1) + ")";
}

[[noreturn]] inline void fail(const std::string& path, const std::string& what, const YAML::Node& at)
{
  throw SchemaError("field '" + path + "': " + what + line_of(at));
}

inline YAML::Node need(const YAML::Node& parent, const std::string& key, const std::string& path)
{
  if (!parent.IsMap())
    fail(path, "expected a mapping", parent);
  YAML::Node n = parent[key];
  if (!n)
    fail(path.empty() ? key : path + "." + key, "missing", parent);
  return n;
}

template <class T>
T as(const YAML::Node& n, const std::string& path, const char* type)
{
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    fail(path, std::string("expected ") + type, n);
  }
}

template <class T>
T get_or(const YAML::Node& parent, const std::string& key, const std::string& path, T fallback,
         const char* type)
{
  if (!parent[key])
    return fallback;
  return as<T>(parent[key], path + "." + key, type);
}

inline double number(const YAML::Node& n, const std::string& path)
{
  if (n.IsScalar()) {
    const auto s = n.Scalar();
    if (s == "inf" || s == ".inf" || s == "infinity")
      return kInf;
  }
  return as<double>(n, path, "a number");
}

inline Vec vector(const YAML::Node& n, const std::string& path)
{
  if (!n.IsSequence() || n.size() == 0)
    fail(path, "expected a non-empty list of numbers", n);
  Vec v(static_cast<Index>(n.size()));
  for (std::size_t i = 0; i < n.size(); ++i)
    v(static_cast<Index>(i)) = number(n[i], path + "[" + std::to_string(i) + "]");
  return v;
}

/// Row-major nested list; a flat list is read as a single column.
inline Mat matrix(const YAML::Node& n, const std::string& path)
{
  if (!n.IsSequence() || n.size() == 0)
    fail(path, "expected a non-empty list of rows", n);
  if (!n[0].IsSequence()) {
    const Vec v = vector(n, path);
    return v;
  }
  const std::size_t cols = n[0].size();
  Mat m(static_cast<Index>(n.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < n.size(); ++i) {
    const std::string rp = path + "[" + std::to_string(i) + "]";
    if (!n[i].IsSequence() || n[i].size() != cols)
      fail(rp, "rows must all have " + std::to_string(cols) + " entries", n[i]);
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) =
          number(n[i][j], rp + "[" + std::to_string(j) + "]");
  }
  return m;
}

struct TaskSpec
{
  std::string name;
  std::string type;  // norm, tensor_norm, check, inflate, witness
  std::string suite; // check tasks
  bool required = false;
  double tolerance = 1e-6;
  std::size_t index = 0;

  HostPtr host, e, f, e2, f2;
  SpacePtr y;
  Mat element, phi, psi;
  Vec fun_f, fun_g;
  std::size_t n_min = 1, n_max = 8, copies = 2, trials = 1000, samples = 16;
  std::size_t elements = 0, families = 5;
  int budget = 50, restarts = 64;
  bool force_j_route = false, rank_one_only = false;
  double p = 2.0;
  std::optional<Norm> norm;
  std::optional<double> expect_ratio_at_least;
};

struct Experiment
{
  std::string schema;
  std::uint64_t seed = 0;
  double tolerance = 1e-6;
  unsigned workers = 1;
  std::map<std::string, SpacePtr> spaces;
  std::map<std::string, Norm> norms;
  std::map<std::string, HostPtr> hosts;
  std::vector<std::string> space_order, host_order;
  std::vector<TaskSpec> tasks;
  std::string text;
};

namespace detail {

inline SpacePtr parse_space(const YAML::Node& n, const std::string& path)
{
  try {
    if (n["unit_atoms"])
      return MeasureSpace::unit_atoms(as<std::size_t>(n["unit_atoms"], path + ".unit_atoms", "a count"),
                                      n["weight"] ? number(n["weight"], path + ".weight") : 1.0);
    if (n["weights"])
      return MeasureSpace::from_weights(vector(n["weights"], path + ".weights"));
    std::vector<Atom> atoms;
    if (const auto a = n["atoms"]) {
      if (!a.IsSequence())
        fail(path + ".atoms", "expected a list", a);
      for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string ap = path + ".atoms[" + std::to_string(i) + "]";
        atoms.push_back({as<std::string>(need(a[i], "label", ap), ap + ".label", "a string"),
                         number(need(a[i], "weight", ap), ap + ".weight")});
      }
    }
    const auto cells = get_or<std::size_t>(n, "cells", path, 0, "a count");
    const double cw = n["cell_weight"] ? number(n["cell_weight"], path + ".cell_weight") : 1.0;
    const bool conv = get_or<bool>(n, "convenient", path, false, "a boolean");
    return MeasureSpace::make(std::move(atoms), cells, cw, conv);
  } catch (const lpq::error& e) {
    fail(path, e.what(), n);
  }
}

inline Norm parse_norm(const YAML::Node& n, const std::string& path)
{
  const auto type = as<std::string>(need(n, "type", path), path + ".type", "a string");
  try {
    if (type == "lr") {
      const double r = number(need(n, "r", path), path + ".r");
      if (n["weights"])
        return Norm::lr(vector(n["weights"], path + ".weights"), r);
      return Norm::lr(as<Index>(need(n, "dim", path), path + ".dim", "a dimension"), r);
    }
    if (type == "polygon")
      return Norm::polygon(matrix(need(n, "vertices", path), path + ".vertices").transpose());
    if (type == "ellipsoid")
      return Norm::ellipsoid(matrix(need(n, "gram", path), path + ".gram"));
  } catch (const lpq::error& e) {
    fail(path, e.what(), n);
  }
  fail(path + ".type", "unknown norm type '" + type + "' (expected lr, polygon or ellipsoid)",
       n["type"]);
}

} // namespace detail

class Loader
{
public:
  explicit Loader(Experiment& ex) : ex_(ex) {}

  SpacePtr space(const YAML::Node& n, const std::string& path) const
  {
    const auto name = as<std::string>(n, path, "a space name");
    auto it = ex_.spaces.find(name);
    if (it == ex_.spaces.end())
      fail(path, "unknown space '" + name + "'", n);
    return it->second;
  }
  Norm norm(const YAML::Node& n, const std::string& path) const
  {
    if (n.IsMap())
      return detail::parse_norm(n, path);
    const auto name = as<std::string>(n, path, "a norm name");
    auto it = ex_.norms.find(name);
    if (it == ex_.norms.end())
      fail(path, "unknown norm '" + name + "'", n);
    return it->second;
  }
  HostPtr host(const YAML::Node& n, const std::string& path) const
  {
    const auto name = as<std::string>(n, path, "a host name");
    auto it = ex_.hosts.find(name);
    if (it == ex_.hosts.end())
      fail(path, "unknown host '" + name + "'", n);
    return it->second;
  }

  HostPtr parse_host(const YAML::Node& n, const std::string& path) const
  {
    const auto kn = need(n, "kind", path);
    Kind kind;
    try {
      kind = kind_from_string(as<std::string>(kn, path + ".kind", "a string"));
    } catch (const lpq::error& e) {
      fail(path + ".kind", e.what(), kn);
    }
    try {
      switch (kind) {
      case Kind::StandardExtension:
        return QuantizedSpace::standard_extension(host(need(n, "inner", path), path + ".inner"),
                                                  get_or<std::size_t>(n, "copies", path, 2, "a count"));
      case Kind::Induced:
        return QuantizedSpace::induced(host(need(n, "outer", path), path + ".outer"));
      case Kind::PConvexTensor:
        fail(path + ".kind", "tensor structures are declared through tensor_norm tasks", kn);
      default:
        return QuantizedSpace::make(kind, space(need(n, "space", path), path + ".space"),
                                    number(need(n, "p", path), path + ".p"),
                                    norm(need(n, "norm", path), path + ".norm"));
      }
    } catch (const lpq::error& e) {
      fail(path, e.what(), n);
    }
  }

  TaskSpec parse_task(const YAML::Node& n, std::size_t index) const
  {
    const std::string path = "tasks[" + std::to_string(index) + "]";
    if (!n.IsMap())
      fail(path, "expected a mapping", n);
    TaskSpec t;
    t.index = index;
    t.type = as<std::string>(need(n, "type", path), path + ".type", "a string");
    t.name = get_or<std::string>(n, "name", path, t.type + "-" + std::to_string(index), "a string");
    t.required = get_or<bool>(n, "required", path, false, "a boolean");
    t.tolerance = n["tolerance"] ? number(n["tolerance"], path + ".tolerance") : ex_.tolerance;
    t.trials = get_or<std::size_t>(n, "trials", path, 1000, "a count");
    t.budget = get_or<int>(n, "budget", path, 50, "an integer");
    t.restarts = get_or<int>(n, "restarts", path, t.type == "witness" ? 8 : 64, "an integer");

    auto tensor_fields = [&] {
      t.e = host(need(n, "e", path), path + ".e");
      t.f = host(need(n, "f", path), path + ".f");
      t.y = space(need(n, "y", path), path + ".y");
      if (const auto c = n["copies"]) {
        if (c.IsMap()) {
          t.n_min = get_or<std::size_t>(c, "min", path + ".copies", 1, "a count");
          t.n_max = get_or<std::size_t>(c, "max", path + ".copies", 8, "a count");
        } else {
          t.n_min = 1;
          t.n_max = as<std::size_t>(c, path + ".copies", "a count");
        }
      }
    };

    if (t.type == "norm") {
      t.host = host(need(n, "host", path), path + ".host");
      t.element = matrix(need(n, "element", path), path + ".element");
    } else if (t.type == "tensor_norm") {
      tensor_fields();
      t.element = matrix(need(n, "element", path), path + ".element");
      t.force_j_route = get_or<bool>(n, "force_j_route", path, false, "a boolean");
    } else if (t.type == "check") {
      t.suite = as<std::string>(need(n, "suite", path), path + ".suite", "a string");
      static const std::vector<std::string> host_suites{"contractibility", "near_l", "p_convexity"};
      static const std::vector<std::string> tensor_suites{
          "tensor_p_convexity", "tensor_contractibility", "theta_contractivity", "metric_mapping",
          "universal_factorization"};
      t.rank_one_only = get_or<bool>(n, "rank_one_only", path, false, "a boolean");
      if (std::find(host_suites.begin(), host_suites.end(), t.suite) != host_suites.end()) {
        t.host = host(need(n, "host", path), path + ".host");
      } else if (std::find(tensor_suites.begin(), tensor_suites.end(), t.suite) !=
                 tensor_suites.end()) {
        tensor_fields();
        if (!n["copies"])
          t.n_max = 4;
        if (t.suite == "metric_mapping") {
          t.phi = matrix(need(n, "phi", path), path + ".phi");
          t.psi = matrix(need(n, "psi", path), path + ".psi");
          t.e2 = n["e2"] ? host(n["e2"], path + ".e2") : t.e;
          t.f2 = n["f2"] ? host(n["f2"], path + ".f2") : t.f;
        }
        if (t.suite == "universal_factorization") {
          t.fun_f = vector(need(n, "functional_f", path), path + ".functional_f");
          t.fun_g = vector(need(n, "functional_g", path), path + ".functional_g");
          t.samples = get_or<std::size_t>(n, "samples", path, 16, "a count");
        }
      } else {
        fail(path + ".suite", "unknown suite '" + t.suite + "'", n["suite"]);
      }
    } else if (t.type == "inflate") {
      t.host = host(need(n, "host", path), path + ".host");
      t.copies = get_or<std::size_t>(n, "copies", path, 2, "a count");
      t.trials = get_or<std::size_t>(n, "trials", path, 100, "a count");
      if (const auto inv = n["invariance"]) {
        t.elements = get_or<std::size_t>(inv, "elements", path + ".invariance", 100, "a count");
        t.families = get_or<std::size_t>(inv, "families", path + ".invariance", 5, "a count");
      }
    } else if (t.type == "witness") {
      t.p = number(need(n, "p", path), path + ".p");
      t.norm = norm(need(n, "norm", path), path + ".norm");
      t.budget = get_or<int>(n, "budget", path, 400, "an integer");
      t.rank_one_only = get_or<bool>(n, "rank_one_only", path, false, "a boolean");
      if (n["expect_ratio_at_least"])
        t.expect_ratio_at_least =
            number(n["expect_ratio_at_least"], path + ".expect_ratio_at_least");
    } else {
      fail(path + ".type", "unknown task type '" + t.type +
                               "' (expected norm, tensor_norm, check, inflate or witness)",
           n["type"]);
    }
    return t;
  }

private:
  Experiment& ex_;
};

inline Experiment parse_experiment(const std::string& text)
{
  Experiment ex;
  ex.text = text;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw SchemaError("config is not valid YAML: " + std::string(e.what()));
  }
  if (!root.IsMap())
    throw SchemaError("config root must be a mapping");
  ex.schema = as<std::string>(need(root, "schema", ""), "schema", "a string");
  if (ex.schema != kConfigSchema)
    fail("schema", "unsupported schema '" + ex.schema + "' (expected " + kConfigSchema + ")",
         root["schema"]);
  ex.seed = as<std::uint64_t>(need(root, "seed", ""), "seed", "an unsigned integer");
  if (root["tolerance"])
    ex.tolerance = number(root["tolerance"], "tolerance");
  ex.workers = get_or<unsigned>(root, "workers", "", 1, "a worker count");

  Loader ld(ex);
  if (const auto s = root["spaces"]) {
    if (!s.IsMap())
      fail("spaces", "expected a mapping", s);
    for (const auto& kv : s) {
      const auto name = kv.first.as<std::string>();
      ex.spaces[name] = detail::parse_space(kv.second, "spaces." + name);
      ex.space_order.push_back(name);
    }
  }
  if (const auto s = root["norms"]) {
    if (!s.IsMap())
      fail("norms", "expected a mapping", s);
    for (const auto& kv : s) {
      const auto name = kv.first.as<std::string>();
      ex.norms.emplace(name, detail::parse_norm(kv.second, "norms." + name));
    }
  }
  if (const auto s = root["hosts"]) {
    if (!s.IsMap())
      fail("hosts", "expected a mapping", s);
    for (const auto& kv : s) {
      const auto name = kv.first.as<std::string>();
      ex.hosts[name] = ld.parse_host(kv.second, "hosts." + name);
      ex.host_order.push_back(name);
    }
  }
  if (const auto s = root["tasks"]) {
    if (!s.IsSequence())
      fail("tasks", "expected a list", s);
    for (std::size_t i = 0; i < s.size(); ++i)
      ex.tasks.push_back(ld.parse_task(s[i], i));
  }
  return ex;
}

inline Experiment load_experiment(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw SchemaError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str());
}

} // namespace lpqcli
