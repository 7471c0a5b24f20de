#include "runner.hpp"

#include <gtest/gtest.h>

using namespace lpqcli;

namespace {

const char* kBase = R"(schema: lpq-experiment/1
seed: 5
spaces:
  X: {unit_atoms: 2}
  Y: {cells: 2, convenient: true}
norms:
  l1: {type: lr, dim: 2, r: 1}
hosts:
  E: {kind: min, space: X, p: 2, norm: l1}
)";

std::string error_of(const std::string& text)
{
  try {
    parse_experiment(text);
  } catch (const SchemaError& e) {
    return e.what();
  }
  return "";
}

json strip_timing(json r)
{
  r.erase("timing");
  return r;
}

std::vector<std::size_t> all(const Experiment& ex)
{
  std::vector<std::size_t> s;
  for (const auto& t : ex.tasks)
    s.push_back(t.index);
  return s;
}

} // namespace

TEST(Cli, EmptyTaskListGivesEmptyReport)
{
  const auto ex = parse_experiment(std::string(kBase) + "tasks: []\n");
  const auto r = run_experiment(ex, all(ex), 1);
  EXPECT_EQ(r.report["schema"], kReportSchema);
  EXPECT_TRUE(r.report["tasks"].empty());
  EXPECT_FALSE(r.required_failed);
}

TEST(Cli, SchemaErrorsNameFieldAndLine)
{
  std::string bad = kBase;
  bad.replace(bad.find("kind: min"), 9, "kind: minimal");
  const auto e = error_of(bad);
  EXPECT_NE(e.find("hosts.E.kind"), std::string::npos) << e;
  EXPECT_NE(e.find("unknown quantization kind 'minimal'"), std::string::npos) << e;
  EXPECT_NE(e.find("line 9"), std::string::npos) << e;

  EXPECT_NE(error_of("schema: lpq-experiment/1\n").find("'seed'"), std::string::npos);
  EXPECT_NE(error_of("schema: lpq-experiment/9\nseed: 1\n").find("unsupported schema"),
            std::string::npos);
  EXPECT_NE(error_of(std::string(kBase) + "tasks:\n  - {type: norm, host: Z, element: [[1, 2]]}\n")
                .find("'tasks[0].host': unknown host 'Z' (line 11)"),
            std::string::npos);
  EXPECT_NE(error_of(std::string(kBase) + "tasks:\n  - {type: check, suite: nope, host: E}\n")
                .find("tasks[0].suite"),
            std::string::npos);
  EXPECT_NE(error_of(std::string(kBase) + "tasks:\n  - {type: norm, host: E, element: [[1, 2], [3]]}\n")
                .find("tasks[0].element[1]"),
            std::string::npos);
}

TEST(Cli, ElementaryTensorTaskAndDeterminism)
{
  const std::string text = std::string(kBase) + R"(tasks:
  - name: t
    type: tensor_norm
    e: E
    f: E
    y: Y
    copies: 4
    budget: 10
    restarts: 2
    element: [[2, 0, 1, 0], [-4, 0, -2, 0]]
  - name: broken
    type: tensor_norm
    e: E
    f: E
    y: Y
    copies: 1
    element: [[1, 0, 0, 1], [0, 1, 1, 0]]
    required: true
  - {name: c, type: check, suite: near_l, host: E, trials: 50, required: true}
)";
  const auto ex = parse_experiment(text);
  const auto r1 = run_experiment(ex, all(ex), 1);
  const auto r2 = run_experiment(ex, all(ex), 3);
  // xi = (1, -2), x = (2, 1), y = (1, 0)
  const double expect = std::sqrt(5.0) * 3.0;
  const auto& est = r1.report["tasks"][0]["result"]["estimate"];
  EXPECT_LE(est["lower"].get<double>(), expect + 1e-9);
  EXPECT_GE(est["upper"].get<double>(), expect - 1e-9);
  EXPECT_LE(est["gap"].get<double>(), 1e-3);
  const auto& broken = r1.report["tasks"][1];
  EXPECT_EQ(broken["status"], "ok");
  EXPECT_EQ(broken["result"]["estimate"]["upper"], "inf");
  EXPECT_FALSE(broken["passed"].get<bool>());
  EXPECT_EQ(r1.report["tasks"][2]["status"], "ok");
  EXPECT_TRUE(r1.required_failed);

  auto a = strip_timing(r1.report), b = strip_timing(r2.report);
  a.erase("workers");
  b.erase("workers");
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(strip_timing(run_experiment(ex, all(ex), 1).report).dump(),
            strip_timing(r1.report).dump());
}

TEST(Cli, TablesListEveryTask)
{
  const auto ex = parse_experiment(std::string(kBase) +
                                   "tasks:\n  - {name: w, type: witness, p: 2, norm: l1, budget: 20, "
                                   "restarts: 2, expect_ratio_at_least: 1.4}\n");
  const auto r = run_experiment(ex, all(ex), 1);
  const auto t = render_tables(r.report);
  EXPECT_NE(t.find("witness"), std::string::npos);
  EXPECT_TRUE(r.report["tasks"][0]["passed"].get<bool>());
}
