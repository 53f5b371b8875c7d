#pragma once

#include <string>
#include <string_view>

#include "oasis/harness.hpp"

namespace oasis {

// An experiment read from a flat key = value file.
//
//   pool = pools/abt.csv            (or the synthetic keys N, matches,
//                                    score_model, noise, pool_seed,
//                                    separation_shape, low_score_match_share, raw_scale)
//   score_kind = auto | probability | raw
//   strategies = oasis, passive
//   replications = 200
//   seed_base = 0
//   workers = 4
//   budget_step = 100
//   budget_limit = 4000
//   oracle = deterministic | bernoulli_noisy
//   oracle_seed = 0
//   output_dir = out
//   keep_traces = false
//   alpha = 0.5                     (any SamplerConfig key, for every strategy)
//   oasis.epsilon = 0.01            (per-strategy override)
struct RunSpec {
  ExperimentSpec experiment;
  std::string output_dir = ".";
  std::string pool_source;  // file path, or "synthetic(...)" with the generator settings
};

// Relative pool and output_dir paths resolve against base_dir.
RunSpec parse_run_spec(std::string_view text, const std::string& base_dir = ".");
RunSpec load_run_spec(const std::string& path);

// Writes metrics_<strategy>.csv, summary.txt and, with keep_traces,
// traces/<strategy>_<replication>.csv under spec.output_dir.
void write_experiment(const RunSpec& spec, const ExperimentResult& result);

}  // namespace oasis
