#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oasis/oracle.hpp"
#include "oasis/pool.hpp"
#include "oasis/samplers.hpp"
#include "oasis/stratification.hpp"

namespace oasis {

enum class ScoreModel { calibrated, raw };

struct SyntheticPoolParams {
  std::size_t N = 20000;
  std::size_t num_matches = 100;
  ScoreModel score_model = ScoreModel::calibrated;
  // Std. dev. of the Gaussian perturbation applied to the calibrated score
  // before thresholding it at 0.5 to form predictions.
  double noise = 0.1;
  std::uint64_t seed = 0;
  // Shape a of the symmetric Beta(a, a) score component holding most matches;
  // a < 1 pushes its scores towards 0 and 1 (more informative), a = 1 is uniform.
  double separation_shape = 0.5;
  // Share of matches hidden among the low-score bulk of the pool.
  double low_score_match_share = 0.0;
  // Raw scores are raw_scale * logit(calibrated score); decision threshold 0.
  double raw_scale = 0.25;
};

// Calibrated scores come from a two-component mixture (symmetric Beta(a,a)
// plus a low-score Beta(1,b) bulk) and labels are Bernoulli(score), adjusted to
// exactly num_matches ones. true_match_prob carries the calibrated score.
Pool generate_synthetic_pool(const SyntheticPoolParams& params);

// Uniform subset without replacement; marginal reset to uniform. Keeps pool order.
Pool subsample_pool(const Pool& pool, std::size_t target_size, std::uint64_t seed);

// Runs `replications` independent copies of one sampler with seeds
// seed_base, seed_base + 1, ... Results are ordered by replication index and do
// not depend on the worker count.
std::vector<RunTrace> run_replications(const Pool& pool, const OracleKind& oracle,
                                       const SamplerConfig& config, std::size_t replications,
                                       std::uint64_t seed_base, std::size_t workers = 1);

// Estimate carried forward to distinct-label budget b: the estimate at the
// last iteration whose budget is <= b. Empty if undefined there.
std::optional<double> estimate_at_budget(const RunTrace& trace, std::size_t budget);

struct MetricSeries {
  std::string strategy;
  std::vector<std::size_t> budgets;
  std::vector<double> abs_err;           // over runs defined at the budget
  std::vector<double> std_dev;           // population std. dev. over the same runs
  std::vector<double> fraction_defined;  // over all runs
  std::vector<std::size_t> runs_reached; // runs whose final budget >= b
  // First grid budget at which >= 95% of runs carry a defined estimate.
  std::optional<std::size_t> first_reliable_budget;
};

inline constexpr double kReliableFraction = 0.95;

MetricSeries aggregate_metrics(const std::string& strategy, const std::vector<RunTrace>& runs,
                               double true_f, const std::vector<std::size_t>& budgets);

// Smallest grid budget (at or after first_reliable_budget) whose abs. err. is <= threshold.
std::optional<std::size_t> budget_to_reach(const MetricSeries& m, double threshold);

void write_metrics(std::ostream& out, const MetricSeries& m);

struct KlPoint {
  std::size_t t = 0;
  std::size_t budget = 0;
  double kl = 0.0;          // +inf when the estimate puts zero mass where v* does not
  double pi_abs_err = 0.0;  // mean over strata of |pi_hat_k - pi_k|
  double v_abs_err = 0.0;   // mean over strata of |v*_k(t) - v*_k|
};

// KL(v* || v*(t)) between the optimal stratum weights under the true match
// rates and F-measure and those implied by the run's posterior after t labels.
// The posterior is replayed from the trace's labels and its recorded prior.
std::vector<KlPoint> kl_to_optimal(const RunTrace& run, const Pool& truth, const Strata& strata,
                                   double alpha, bool prior_decay = false, std::size_t stride = 1);

// KL(p || q) with 0 log 0 = 0.
double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

// Per-stratum true match rates (marginal-weighted).
Eigen::VectorXd true_stratum_rates(const Pool& pool, const Strata& strata);

struct ExperimentSpec {
  std::shared_ptr<const Pool> pool;
  std::vector<Strategy> strategies;
  std::map<Strategy, SamplerConfig> configs;
  OracleKind oracle;
  std::size_t replications = 200;
  std::uint64_t seed_base = 0;
  std::vector<std::size_t> budgets;
  std::size_t workers = 1;
  bool keep_traces = false;

  void validate() const;
};

struct ExperimentResult {
  double true_f = 0.0;
  std::vector<MetricSeries> metrics;
  std::map<Strategy, std::vector<RunTrace>> traces;  // only when keep_traces
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

// Evenly spaced budgets step, 2*step, ..., <= max_budget.
std::vector<std::size_t> budget_grid(std::size_t step, std::size_t max_budget);

}  // namespace oasis
