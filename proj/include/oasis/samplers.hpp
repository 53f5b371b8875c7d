#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "oasis/bayes_model.hpp"
#include "oasis/estimators.hpp"
#include "oasis/instrumental.hpp"
#include "oasis/oracle.hpp"
#include "oasis/pool.hpp"
#include "oasis/random.hpp"
#include "oasis/stratification.hpp"

namespace oasis {

enum class Strategy { oasis, passive, stratified, importance };

const char* to_string(Strategy s);
Strategy parse_strategy(const std::string& name);

struct SamplerConfig {
  Strategy strategy = Strategy::oasis;
  double alpha = 0.5;
  double epsilon = kDefaultEpsilon;
  std::optional<double> eta;  // defaults to 2K
  std::size_t iterations = 5000;
  std::size_t desired_K = kDefaultStrata;
  std::size_t histogram_bins = kDefaultHistogramBins;
  std::optional<double> tau;
  bool prior_decay = false;
  std::uint64_t seed = 0;
  // Stop before `iterations` once this many distinct labels have been bought.
  std::optional<std::size_t> max_budget;
  // Keep v^(t) for every iteration (OASIS only); memory grows with T * K.
  bool record_instrumental = false;

  void validate() const;
};

struct IterationRecord {
  std::size_t t = 0;
  std::size_t pair_index = 0;
  int stratum = -1;
  double weight = 0.0;
  int label = 0;
  int prediction = 0;
  std::optional<double> f_estimate;
  std::size_t budget = 0;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct RunTrace {
  Strategy strategy = Strategy::oasis;
  std::vector<IterationRecord> records;
  // OASIS only: model state needed to audit or replay the run.
  Eigen::VectorXd prior_pi0;
  double eta = 0.0;
  std::optional<double> initial_f;
  Eigen::MatrixXd final_posterior;      // 2 x K
  Eigen::VectorXd final_instrumental;   // v at the last iteration (q for IS is per pair, omitted)
  std::vector<Eigen::VectorXd> instrumental_history;

  std::optional<double> final_estimate() const {
    return records.empty() ? std::nullopt : records.back().f_estimate;
  }
  std::size_t final_budget() const { return records.empty() ? 0 : records.back().budget; }
};

// Maps v*, omega and epsilon to the sampling distribution over strata.
using MixingRule = std::function<Eigen::VectorXd(const Eigen::VectorXd& v_star,
                                                 const Eigen::VectorXd& omega, double epsilon)>;

MixingRule default_mixing_rule();

// Stepwise OASIS state machine: propose() pins the next (stratum, pair) draw,
// observe() consumes its label. run_oasis and the labelling service both
// drive it, so a session replays exactly as a batch run with the same seed.
class OasisSampler {
 public:
  struct Draw {
    std::size_t pair_index = 0;
    int stratum = 0;
    double weight = 0.0;
    double stratum_prob = 0.0;
  };

  OasisSampler(const Pool& pool, const SamplerConfig& config);
  OasisSampler(const Pool& pool, const SamplerConfig& config, MixingRule mixing);

  // Draws the next query or returns the pending one. Throws exhausted after T iterations.
  const Draw& propose();
  const std::optional<Draw>& pending() const noexcept { return pending_; }
  IterationRecord observe(int label, std::size_t budget);

  bool exhausted() const noexcept { return iteration_ >= config_.iterations; }
  std::size_t iteration() const noexcept { return iteration_; }
  const SamplerConfig& config() const noexcept { return config_; }
  const Pool& pool() const noexcept { return pool_; }
  const Strata& strata() const noexcept { return strata_; }
  const PosteriorMatrix<double>& posterior() const noexcept { return posterior_; }
  const Eigen::VectorXd& prior_pi0() const noexcept { return prior_pi0_; }
  double initial_f() const noexcept { return initial_f_; }
  double eta() const noexcept { return posterior_.eta(); }
  const SampleHistory& history() const noexcept { return history_; }
  std::optional<double> estimate() const { return ais_f_estimate(history_, config_.alpha); }

  // Sampling distribution for the next draw, from the current posterior and estimate.
  InstrumentalDist<double> instrumental() const;

 private:
  const Pool& pool_;
  SamplerConfig config_;
  MixingRule mixing_;
  Strata strata_;
  Eigen::VectorXd prior_pi0_;
  double initial_f_ = 0.0;
  PosteriorMatrix<double> posterior_;
  SampleHistory history_;
  Rng rng_;
  std::vector<std::vector<double>> within_cumulative_;  // non-uniform marginals only
  std::optional<Draw> pending_;
  std::size_t iteration_ = 0;
};

RunTrace run_oasis(const Pool& pool, const OracleKind& oracle, const SamplerConfig& config,
                   ExternalLabeller labeller = {});
RunTrace run_oasis(const Pool& pool, const OracleKind& oracle, const SamplerConfig& config,
                   MixingRule mixing, ExternalLabeller labeller);
RunTrace run_passive(const Pool& pool, const OracleKind& oracle, const SamplerConfig& config,
                     ExternalLabeller labeller = {});
RunTrace run_stratified(const Pool& pool, const OracleKind& oracle, const SamplerConfig& config,
                        ExternalLabeller labeller = {});
RunTrace run_is(const Pool& pool, const OracleKind& oracle, const SamplerConfig& config,
                ExternalLabeller labeller = {});

// Dispatches on config.strategy.
RunTrace run_sampler(const Pool& pool, const OracleKind& oracle, const SamplerConfig& config,
                     ExternalLabeller labeller = {});

// Proxy match probabilities for IS: the score itself when scores are
// probabilities, else the logistic of (score - tau).
std::vector<double> score_proxies(const Pool& pool, std::optional<double> tau);

// Labeller that replays a fixed label sequence, one label per call.
ExternalLabeller replay_labeller(std::vector<int> labels);

}  // namespace oasis
