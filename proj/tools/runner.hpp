#pragma once

#include "config.hpp"

#include <json.hpp>

#include <array>
#include <chrono>
#include <iomanip>

namespace lpqcli {

using json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "lpq-report/1";
inline constexpr const char* kVersion = "0.1.0";

inline json num(double x)
{
  if (std::isnan(x))
    return "nan";
  if (std::isinf(x))
    return x > 0 ? "inf" : "-inf";
  return x;
}

inline json to_json(const Mat& m)
{
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Index j = 0; j < m.cols(); ++j)
      r.push_back(num(m(i, j)));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline json to_json(const Vec& v)
{
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i)
    out.push_back(num(v(i)));
  return out;
}

inline json to_json(const NormEstimate& e)
{
  return {{"lower", num(e.lower)},
          {"upper", num(e.upper)},
          {"gap", num(e.upper - e.lower)},
          {"method_tags", e.method_tags}};
}

inline json to_json(const CheckReport& r)
{
  json w = json::object();
  for (const auto& [k, m] : r.witness)
    w[k] = to_json(m);
  return {{"name", r.name},
          {"trials", r.trials},
          {"worst_ratio", num(r.worst_ratio)},
          {"threshold", num(r.threshold())},
          {"passed", r.passed},
          {"tolerance", num(r.tolerance)},
          {"seed", r.seed},
          {"witness", w},
          {"witness_note", r.witness_note},
          {"notes", r.notes},
          {"scope", "sampled suite at the recorded seed"}};
}

inline json to_json(const Representation& r)
{
  json terms = json::array();
  for (const auto& t : r.terms)
    terms.push_back({{"copy", t.copy}, {"u", to_json(t.u)}, {"v", to_json(t.v)}});
  json out{{"a", to_json(r.a)}, {"terms", terms}};
  if (r.a_norm_bound)
    out["a_norm_bound"] = num(*r.a_norm_bound);
  return out;
}

inline json to_json(const LowerCertificate& c)
{
  json out{{"type", c.type == LowerCertificate::Type::Scalar ? "scalar" : "identity_vector_valued"},
           {"verified_amp_bound", num(c.verified_amp_bound)},
           {"method_tags", c.method_tags}};
  if (c.type == LowerCertificate::Type::Scalar) {
    out["f"] = to_json(c.f);
    out["g"] = to_json(c.g);
  }
  return out;
}

struct TaskOutcome
{
  json payload;
  bool ok = true;
  bool passed = true; // false only for failed checks
  double millis = 0.0;
};

inline UpperOptions upper_options(const TaskSpec& t, std::uint64_t seed)
{
  UpperOptions u;
  u.budget = t.budget;
  u.restarts = t.restarts;
  u.seed = seed;
  u.amp = {0, 0};
  return u;
}

inline TensorModel tensor_model(const TaskSpec& t)
{
  return TensorModel::make(t.e, t.f, t.y, t.n_max);
}

inline json run_task_body(const TaskSpec& t, std::uint64_t seed, bool& passed)
{
  SuiteOptions so;
  so.trials = t.trials;
  so.seed = seed;
  so.tolerance = t.tolerance;

  if (t.type == "norm") {
    AmpOptions amp{32, seed};
    return {{"estimate", to_json(amplified_norm(*t.host, t.element, amp))},
            {"host", t.host->describe()}};
  }
  if (t.type == "tensor_norm") {
    TensorOptions o;
    o.n_min = t.n_min;
    o.n_max = t.n_max;
    o.upper = upper_options(t, seed);
    o.seed = seed;
    o.force_j_route = t.force_j_route;
    const auto r = tensor_norm(tensor_model(t), t.element, o);
    // no representation fits in n_max copies
    passed = std::isfinite(r.estimate.upper);
    json trace = json::array();
    for (const auto& [n, v] : r.trace)
      trace.push_back({{"copies", n}, {"upper", num(v)}});
    json out{{"estimate", to_json(r.estimate)},
             {"copies_used", r.copies_used},
             {"route", r.route},
             {"budget", {{"proposals", t.budget}, {"chains", t.restarts}}},
             {"trace", trace},
             {"representation", to_json(r.best_rep)}};
    out["certificate"] = r.best_cert ? to_json(*r.best_cert) : json(nullptr);
    return out;
  }
  if (t.type == "check") {
    CheckReport rep;
    if (t.suite == "contractibility") {
      rep = check_contractibility(t.host, so, {8, seed}, t.rank_one_only);
    } else if (t.suite == "near_l") {
      rep = check_near_L(t.host, so, {8, seed});
    } else if (t.suite == "p_convexity") {
      rep = check_p_convexity(t.host, so, {8, seed});
    } else if (t.suite == "tensor_p_convexity") {
      rep = check_tensor_p_convexity(tensor_model(t), so, upper_options(t, seed));
    } else if (t.suite == "tensor_contractibility") {
      rep = check_tensor_contractibility(tensor_model(t), so, upper_options(t, seed));
    } else if (t.suite == "theta_contractivity") {
      rep = check_theta_contractivity(tensor_model(t), so);
    } else if (t.suite == "metric_mapping") {
      MetricMappingOptions mo;
      mo.suite = so;
      mo.upper = upper_options(t, seed);
      rep = check_metric_mapping(t.phi, t.psi, tensor_model(t), t.e2, t.f2, mo);
    } else if (t.suite == "universal_factorization") {
      const auto m = tensor_model(t);
      const auto cert = scalar_certificate(m, t.fun_f, t.fun_g, seed);
      if (!cert)
        throw error("certificate rejected: its amplification bound could not be verified");
      const auto f = universal_factorization_check(m, *cert, static_cast<int>(t.samples), seed,
                                                   std::max(t.tolerance, 1e-3),
                                                   upper_options(t, seed));
      passed = f.consistent;
      return {{"rho", to_json(f.rho)},
              {"rho_bar", to_json(f.rho_bar)},
              {"R", to_json(f.R)},
              {"R_bar", to_json(f.R_bar)},
              {"consistent", f.consistent},
              {"tolerance", num(f.tolerance)},
              {"notes", f.notes}};
    }
    passed = rep.passed;
    return {{"report", to_json(rep)}};
  }
  if (t.type == "inflate") {
    InflationOptions o;
    o.suite = so;
    o.suite.tolerance = std::min(t.tolerance, 1e-9);
    o.copies = t.copies;
    o.amp = {16, seed};
    const auto r = verify_inflation(t.host, o);
    json checks = json::array();
    for (const auto& c : r.checks)
      checks.push_back(to_json(c));
    passed = r.passed();
    json out{{"label", r.label},
             {"near_L_input", r.near_L_input},
             {"precheck", to_json(r.precheck)},
             {"checks", checks},
             {"transport_seed", r.transport_seed}};
    if (t.elements > 0) {
      const auto inv = inflation_invariance_check(t.host, t.copies, t.elements, t.families, seed);
      out["invariance"] = {{"elements", inv.elements},
                           {"families", t.families},
                           {"max_family_spread", num(inv.max_family_spread)},
                           {"max_split_spread", num(inv.max_split_spread)},
                           {"passed", inv.passed}};
      passed = passed && inv.passed;
    }
    return out;
  }
  if (t.type == "witness") {
    WitnessOptions o;
    o.budget = t.budget;
    o.restarts = t.restarts;
    o.seed = seed;
    o.rank_one_only = t.rank_one_only;
    o.tolerance = t.tolerance;
    const auto rep = find_contractibility_witness(t.p, *t.norm, o);
    json out{{"report", to_json(rep)}};
    if (t.expect_ratio_at_least) {
      passed = rep.worst_ratio >= *t.expect_ratio_at_least - 1e-6;
      out["expect_ratio_at_least"] = num(*t.expect_ratio_at_least);
    } else {
      passed = rep.passed;
    }
    return out;
  }
  throw error("unknown task type '" + t.type + "'");
}

inline TaskOutcome run_task(const TaskSpec& t, std::uint64_t seed)
{
  TaskOutcome out;
  const auto start = std::chrono::steady_clock::now();
  json entry{{"name", t.name},
             {"type", t.type},
             {"required", t.required},
             {"seed", seed},
             {"tolerance", num(t.tolerance)}};
  if (!t.suite.empty())
    entry["suite"] = t.suite;
  try {
    bool passed = true;
    entry["result"] = run_task_body(t, seed, passed);
    entry["status"] = "ok";
    entry["passed"] = passed;
    out.passed = passed;
  } catch (const std::exception& e) {
    entry["status"] = "error";
    entry["error"] = e.what();
    entry["passed"] = false;
    out.ok = false;
    out.passed = false;
  }
  out.payload = std::move(entry);
  out.millis =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// FNV-1a over the config text.
inline std::string config_hash(const std::string& text)
{
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline json environment()
{
  std::ostringstream cxx;
#if defined(__clang__)
  cxx << "clang " << __clang_major__ << "." << __clang_minor__;
#elif defined(__GNUC__)
  cxx << "gcc " << __GNUC__ << "." << __GNUC_MINOR__;
#else
  cxx << "unknown";
#endif
  return {{"lpq", kVersion},
          {"compiler", cxx.str()},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                        "." + std::to_string(EIGEN_MINOR_VERSION)}};
}

struct RunResult
{
  json report;
  bool required_failed = false;
};

/// Runs the selected tasks, at most `workers` at a time; each task owns the
/// seed derive_seed(seed, index) and assembly happens in task order.
inline RunResult run_experiment(const Experiment& ex, const std::vector<std::size_t>& selected,
                                unsigned workers)
{
  std::vector<TaskOutcome> outcomes(selected.size());
  const unsigned w = std::max(1u, workers);
  for (std::size_t b = 0; b < selected.size(); b += w) {
    std::vector<std::future<void>> jobs;
    for (std::size_t i = b; i < std::min(selected.size(), b + w); ++i)
      jobs.push_back(std::async(std::launch::async, [&, i] {
        const auto& t = ex.tasks[selected[i]];
        outcomes[i] = run_task(t, derive_seed(ex.seed, 0x7a5c + t.index));
      }));
    for (auto& j : jobs)
      j.get();
  }
  RunResult res;
  json tasks = json::array();
  json timing = json::array();
  std::size_t errors = 0, failed = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& t = ex.tasks[selected[i]];
    if (!outcomes[i].ok)
      ++errors;
    if (t.required && !outcomes[i].passed) {
      ++failed;
      res.required_failed = true;
    }
    tasks.push_back(outcomes[i].payload);
    timing.push_back({{"name", t.name}, {"millis", outcomes[i].millis}});
  }
  res.report = {{"schema", kReportSchema},
                {"config_schema", ex.schema},
                {"config_hash", config_hash(ex.text)},
                {"seed", ex.seed},
                {"workers", w},
                {"environment", environment()},
                {"tasks", tasks},
                {"summary",
                 {{"tasks", outcomes.size()},
                  {"errors", errors},
                  {"required_failed", failed},
                  {"passed", !res.required_failed}}},
                {"timing", {{"tasks", timing}}}};
  return res;
}

namespace detail {

inline std::string fmt(const json& v)
{
  if (v.is_number_float()) {
    std::ostringstream os;
    os << std::setprecision(8) << v.get<double>();
    return os.str();
  }
  if (v.is_string())
    return v.get<std::string>();
  return v.dump();
}

inline std::string summary(const json& task)
{
  if (task.value("status", "") == "error")
    return task.value("error", "");
  const auto& r = task["result"];
  const auto type = task.value("type", "");
  if (type == "norm" || type == "tensor_norm")
    return "[" + fmt(r["estimate"]["lower"]) + ", " + fmt(r["estimate"]["upper"]) + "]";
  if (r.contains("report"))
    return "worst ratio " + fmt(r["report"]["worst_ratio"]) + " / threshold " +
           fmt(r["report"]["threshold"]);
  if (r.contains("consistent"))
    return std::string("rho [") + fmt(r["rho"]["lower"]) + ", " + fmt(r["rho"]["upper"]) + "], R [" +
           fmt(r["R"]["lower"]) + ", " + fmt(r["R"]["upper"]) + "]";
  if (r.contains("label"))
    return r["label"].get<std::string>();
  return "";
}

} // namespace detail

/// Aligned plain-text tables: one row per task, then per-N traces.
inline std::string render_tables(const json& report)
{
  std::vector<std::array<std::string, 5>> rows{{"task", "type", "status", "passed", "result"}};
  for (const auto& t : report["tasks"]) {
    std::string type = t.value("type", "");
    if (t.contains("suite"))
      type += ":" + t["suite"].get<std::string>();
    rows.push_back({t.value("name", ""), type, t.value("status", ""),
                    t.value("passed", false) ? "yes" : "no", detail::summary(t)});
  }
  std::array<std::size_t, 5> width{};
  for (const auto& r : rows)
    for (std::size_t c = 0; c < 5; ++c)
      width[c] = std::max(width[c], r[c].size());
  std::ostringstream os;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < 5; ++c)
      os << std::left << std::setw(static_cast<int>(c == 4 ? 0 : width[c] + 2)) << rows[i][c];
    os << "\n";
    if (i == 0) {
      std::size_t total = 0;
      for (auto w : width)
        total += w + 2;
      os << std::string(total, '-') << "\n";
    }
  }
  for (const auto& t : report["tasks"]) {
    if (t.value("type", "") != "tensor_norm" || t.value("status", "") != "ok")
      continue;
    os << "\ntrace " << t.value("name", "") << "\ncopies  upper\n";
    for (const auto& row : t["result"]["trace"])
      os << std::left << std::setw(8) << row["copies"].dump() << detail::fmt(row["upper"]) << "\n";
  }
  const auto& s = report["summary"];
  os << "\n" << s["tasks"].dump() << " tasks, " << s["errors"].dump() << " errors, "
     << s["required_failed"].dump() << " required failures\n";
  return os.str();
}

} // namespace lpqcli
