#pragma once

#include "lpq/common.hpp"

#include <future>
#include <utility>

namespace lpq {

/// Outcome of a sampled inequality check. `worst_ratio` is the largest
/// lower(lhs) / upper(rhs) seen; values above 1 + 10 * tol are violations.
/// A pass is a statement about the sampled suite at `seed` only.
struct CheckReport
{
  std::string name;
  std::size_t trials = 0;
  double worst_ratio = 0.0;
  std::vector<std::pair<std::string, Mat>> witness;
  std::string witness_note;
  bool passed = true;
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
  std::vector<std::string> notes;

  double threshold() const { return 1.0 + 10.0 * tolerance; }
};

struct TrialResult
{
  double ratio = 0.0;
  std::vector<std::pair<std::string, Mat>> witness;
  std::string note;
};

struct SuiteOptions
{
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  double tolerance = 1e-6;
  unsigned workers = 1;
};

/// Runs `trial(i, rng)` for i < trials with per-trial derived generators.
/// Workers split the index range; the merge scans in index order, so the
/// report does not depend on the worker count.
template <class F>
CheckReport run_trials(std::string name, const SuiteOptions& opt, F&& trial)
{
  std::vector<TrialResult> results(opt.trials);
  auto chunk = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = derive_rng(opt.seed, 0x1000 + i);
      results[i] = trial(i, rng);
    }
  };
  const unsigned workers = std::max(1u, opt.workers);
  if (workers == 1 || opt.trials < 2) {
    chunk(0, opt.trials);
  } else {
    std::vector<std::future<void>> jobs;
    const std::size_t step = (opt.trials + workers - 1) / workers;
    for (std::size_t b = 0; b < opt.trials; b += step)
      jobs.push_back(std::async(std::launch::async, chunk, b, std::min(opt.trials, b + step)));
    for (auto& j : jobs)
      j.get();
  }
  CheckReport rep;
  rep.name = std::move(name);
  rep.trials = opt.trials;
  rep.tolerance = opt.tolerance;
  rep.seed = opt.seed;
  for (std::size_t i = 0; i < results.size(); ++i)
    if (i == 0 || results[i].ratio > rep.worst_ratio) {
      rep.worst_ratio = results[i].ratio;
      rep.witness = std::move(results[i].witness);
      rep.witness_note = std::move(results[i].note);
    }
  rep.passed = rep.worst_ratio <= rep.threshold();
  return rep;
}

} // namespace lpq
