#include "runner.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace lpqcli;

namespace {

struct Common
{
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string output;
  std::optional<double> tol;
  std::vector<std::string> task_tol;
};

void add_common(CLI::App* sub, Common& c, bool config_required)
{
  auto* opt = sub->add_option("-c,--config", c.config, "experiment file (YAML)");
  if (config_required)
    opt->required();
  sub->add_option("-s,--seed", c.seed, "override the config seed");
  sub->add_option("-j,--workers", c.workers, "tasks run concurrently");
  sub->add_option("-o,--output", c.output, "write the JSON report here ('-' for stdout)");
  sub->add_option("--tol", c.tol, "override every task tolerance");
  sub->add_option("--task-tol", c.task_tol, "per-task tolerance, NAME=VALUE (repeatable)");
}

void apply_overrides(Experiment& ex, const Common& c)
{
  if (c.seed)
    ex.seed = *c.seed;
  if (c.workers)
    ex.workers = *c.workers;
  if (c.tol) {
    ex.tolerance = *c.tol;
    for (auto& t : ex.tasks)
      t.tolerance = *c.tol;
  }
  for (const auto& kv : c.task_tol) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw SchemaError("--task-tol expects NAME=VALUE, got '" + kv + "'");
    const auto name = kv.substr(0, eq);
    double v = 0.0;
    try {
      v = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw SchemaError("--task-tol " + name + ": '" + kv.substr(eq + 1) + "' is not a number");
    }
    bool found = false;
    for (auto& t : ex.tasks)
      if (t.name == name) {
        t.tolerance = v;
        found = true;
      }
    if (!found)
      throw SchemaError("--task-tol: no task named '" + name + "'");
  }
}

int emit(const RunResult& r, const std::string& output)
{
  if (output == "-") {
    std::cout << r.report.dump(2) << "\n";
  } else {
    std::cout << render_tables(r.report);
    if (!output.empty()) {
      std::ofstream out(output);
      if (!out)
        throw SchemaError("cannot write report to '" + output + "'");
      out << r.report.dump(2) << "\n";
    }
  }
  return r.required_failed ? 1 : 0;
}

int run_types(const Common& c, const std::vector<std::string>& types)
{
  Experiment ex = load_experiment(c.config);
  apply_overrides(ex, c);
  std::vector<std::size_t> sel;
  for (const auto& t : ex.tasks)
    if (types.empty() || std::find(types.begin(), types.end(), t.type) != types.end())
      sel.push_back(t.index);
  return emit(run_experiment(ex, sel, ex.workers), c.output);
}

int describe_spaces(const Common& c)
{
  Experiment ex = load_experiment(c.config);
  std::cout << "schema " << ex.schema << ", seed " << ex.seed << "\n\nspaces\n";
  for (const auto& name : ex.space_order) {
    const auto& s = ex.spaces.at(name);
    std::cout << "  " << name << ": dim " << s->dim() << ", measure " << s->weights().sum()
              << (s->convenient() ? ", convenient" : "") << "\n    weights";
    for (std::size_t i = 0; i < s->dim(); ++i)
      std::cout << " " << s->label(i) << "=" << s->weight(i);
    std::cout << "\n";
  }
  std::cout << "\nhosts\n";
  for (const auto& name : ex.host_order)
    std::cout << "  " << name << ": " << ex.hosts.at(name)->describe() << "\n";
  std::cout << "\ntasks\n";
  for (const auto& t : ex.tasks)
    std::cout << "  " << t.name << ": " << t.type << (t.suite.empty() ? "" : ":" + t.suite)
              << (t.required ? " (required)" : "") << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Finite-model experiments with L_p-quantized normed spaces"};
  app.require_subcommand(1);

  Common space_opt, norm_opt, check_opt, inflate_opt, witness_opt, report_opt;

  auto* space = app.add_subcommand("space", "describe the spaces, hosts and tasks of a config");
  space->add_option("-c,--config", space_opt.config, "experiment file (YAML)")->required();

  auto* norm = app.add_subcommand("norm", "run norm and tensor_norm tasks");
  add_common(norm, norm_opt, true);
  auto* check = app.add_subcommand("check", "run property check tasks");
  add_common(check, check_opt, true);
  auto* inflate = app.add_subcommand("inflate", "run inflation verification tasks");
  add_common(inflate, inflate_opt, true);

  auto* witness = app.add_subcommand("witness", "search for contractibility violations");
  add_common(witness, witness_opt, false);
  double wp = 2.0, wr = 1.0;
  Index wdim = 2;
  int wbudget = 400, wrestarts = 8;
  bool wrank1 = false;
  witness->add_option("--p", wp, "exponent p (without a config)");
  witness->add_option("--r", wr, "E = l_r^dim (without a config)");
  witness->add_option("--dim", wdim, "dimension of E (without a config)");
  witness->add_option("--budget", wbudget, "proposals per restart");
  witness->add_option("--restarts", wrestarts, "independent restarts");
  witness->add_flag("--rank-one", wrank1, "restrict to rank-one operators");

  auto* report = app.add_subcommand("report", "run every task, or render an existing report");
  add_common(report, report_opt, false);
  std::string input;
  report->add_option("-i,--input", input, "JSON report to render as tables");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*space)
      return describe_spaces(space_opt);
    if (*norm)
      return run_types(norm_opt, {"norm", "tensor_norm"});
    if (*check)
      return run_types(check_opt, {"check"});
    if (*inflate)
      return run_types(inflate_opt, {"inflate"});
    if (*witness) {
      if (!witness_opt.config.empty())
        return run_types(witness_opt, {"witness"});
      Experiment ex;
      ex.schema = kConfigSchema;
      ex.seed = witness_opt.seed.value_or(0);
      ex.text = "witness p=" + std::to_string(wp) + " r=" + std::to_string(wr) +
                " dim=" + std::to_string(wdim);
      TaskSpec t;
      t.name = "witness";
      t.type = "witness";
      t.p = wp;
      t.norm = Norm::lr(wdim, wr);
      t.budget = wbudget;
      t.restarts = wrestarts;
      t.rank_one_only = wrank1;
      t.tolerance = witness_opt.tol.value_or(1e-6);
      ex.tasks.push_back(t);
      return emit(run_experiment(ex, {0}, 1), witness_opt.output);
    }
    if (*report) {
      if (!input.empty()) {
        std::ifstream in(input);
        if (!in)
          throw SchemaError("cannot open report '" + input + "'");
        const json r = json::parse(in);
        if (r.value("schema", "") != kReportSchema)
          throw SchemaError("'" + input + "' is not a " + std::string(kReportSchema) + " report");
        std::cout << render_tables(r);
        return r["summary"].value("passed", false) ? 0 : 1;
      }
      if (report_opt.config.empty())
        throw SchemaError("report needs --config or --input");
      return run_types(report_opt, {});
    }
  } catch (const SchemaError& e) {
    std::cerr << "lpq: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "lpq: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
