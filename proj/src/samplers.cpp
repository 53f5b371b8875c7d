#include "oasis/samplers.hpp"

#include <algorithm>
#include <memory>

#include "oasis/error.hpp"

namespace oasis {
namespace {

// Stream tags keep the sampler's draws independent of any noisy-oracle draws.
constexpr std::uint64_t kSamplerStream = 1;

std::vector<double> cumulative(std::span<const double> masses) {
  std::vector<double> c(masses.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < masses.size(); ++i) c[i] = acc += masses[i];
  return c;
}

// Inverse-CDF draw over a cumulative mass table; skips zero-mass entries.
std::size_t draw_cumulative(Rng& rng, const std::vector<double>& cum) {
  const double u = uniform01(rng) * cum.back();
  auto it = std::upper_bound(cum.begin(), cum.end(), u);
  if (it == cum.end()) {
    // u rounded up to the total; take the last entry with positive mass.
    it = std::prev(cum.end());
    while (it != cum.begin() && *it == *std::prev(it)) --it;
  }
  return static_cast<std::size_t>(it - cum.begin());
}

bool budget_reached(const SamplerConfig& c, std::size_t budget) {
  return c.max_budget && budget >= *c.max_budget;
}

LabelLedger make_ledger(const OracleKind& oracle, ExternalLabeller labeller) {
  LabelLedger ledger(oracle);
  if (labeller) ledger.attach_labeller(std::move(labeller));
  return ledger;
}

}  // namespace

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::oasis: return "oasis";
    case Strategy::passive: return "passive";
    case Strategy::stratified: return "stratified";
    case Strategy::importance: return "is";
  }
  return "unknown";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "oasis") return Strategy::oasis;
  if (name == "passive") return Strategy::passive;
  if (name == "stratified") return Strategy::stratified;
  if (name == "is") return Strategy::importance;
  throw Error(ErrorCategory::parameter, "unknown strategy '" + name + "'", "strategy");
}

void SamplerConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw Error(ErrorCategory::domain, "alpha must lie in [0,1]", "alpha");
  if (!(epsilon > 0.0 && epsilon <= 1.0))
    throw Error(ErrorCategory::domain, "epsilon must lie in (0,1]", "epsilon");
  if (eta && !(*eta > 0.0)) throw Error(ErrorCategory::domain, "eta must be positive", "eta");
  if (iterations == 0) throw Error(ErrorCategory::parameter, "iterations must be >= 1", "iterations");
  if (desired_K == 0) throw Error(ErrorCategory::parameter, "desired_K must be >= 1", "desired_K");
  if (histogram_bins == 0)
    throw Error(ErrorCategory::parameter, "histogram_bins must be >= 1", "histogram_bins");
  if (max_budget && *max_budget == 0)
    throw Error(ErrorCategory::parameter, "max_budget must be >= 1", "max_budget");
}

MixingRule default_mixing_rule() {
  return [](const Eigen::VectorXd& v_star, const Eigen::VectorXd& omega, double epsilon) {
    return epsilon_greedy(v_star, omega, epsilon).stratum_probs;
  };
}

OasisSampler::OasisSampler(const Pool& pool, const SamplerConfig& config)
    : OasisSampler(pool, config, default_mixing_rule()) {}

OasisSampler::OasisSampler(const Pool& pool, const SamplerConfig& config, MixingRule mixing)
    : pool_(pool), config_(config), mixing_(std::move(mixing)) {
  config_.validate();
  strata_ = csf_stratify(pool_, config_.desired_K, config_.histogram_bins);
  const double eta = config_.eta.value_or(2.0 * static_cast<double>(strata_.count()));
  auto init = initialize_model(pool_, strata_, config_.alpha, config_.tau, eta);
  prior_pi0_ = std::move(init.prior_pi0);
  initial_f_ = init.initial_f;
  posterior_ = std::move(init.posterior);
  rng_.seed(derive_seed(config_.seed, kSamplerStream));
  if (!pool_.uniform_marginal()) {
    within_cumulative_.reserve(strata_.count());
    for (const auto& members : strata_.members) {
      std::vector<double> masses;
      masses.reserve(members.size());
      for (auto i : members) masses.push_back(pool_.marginal()[i]);
      within_cumulative_.push_back(cumulative(masses));
    }
  }
}

InstrumentalDist<double> OasisSampler::instrumental() const {
  const double f = estimate().value_or(initial_f_);
  const Eigen::VectorXd v_star = optimal_stratum_weights(
      strata_.weights, strata_.mean_predictions, posterior_.means(), f, config_.alpha);
  return {mixing_(v_star, strata_.weights, config_.epsilon), v_star, config_.epsilon};
}

const OasisSampler::Draw& OasisSampler::propose() {
  if (pending_) return *pending_;
  if (exhausted()) throw Error(ErrorCategory::exhausted, "sampler has completed all iterations");
  const Eigen::VectorXd v = instrumental().stratum_probs;
  const auto k = categorical(rng_, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())),
                             v.sum());
  const auto& members = strata_.members[k];
  std::size_t pick = 0;
  if (pool_.uniform_marginal())
    pick = static_cast<std::size_t>(uniform_index(rng_, members.size()));
  else
    pick = draw_cumulative(rng_, within_cumulative_[k]);
  const auto ki = static_cast<Eigen::Index>(k);
  pending_ = Draw{members[pick], static_cast<int>(k), strata_.weights(ki) / v(ki), v(ki)};
  return *pending_;
}

IterationRecord OasisSampler::observe(int label, std::size_t budget) {
  if (!pending_) throw Error(ErrorCategory::conflict, "no pending query to label");
  const Draw d = *pending_;
  pending_.reset();
  ++iteration_;
  const int prediction = pool_[d.pair_index].predicted_label;
  history_.append({iteration_, d.pair_index, d.weight, label, prediction, d.stratum});
  posterior_.update(d.stratum, label, config_.prior_decay);
  return {iteration_, d.pair_index, d.stratum, d.weight, label, prediction, estimate(), budget};
}

namespace {

void snapshot_model(const OasisSampler& s, RunTrace& trace) {
  trace.prior_pi0 = s.prior_pi0();
  trace.eta = s.eta();
  trace.initial_f = s.initial_f();
  trace.final_posterior = s.posterior().gamma();
  trace.final_instrumental = s.instrumental().stratum_probs;
}

}  // namespace

RunTrace run_oasis(const Pool& pool, const OracleKind& oracle, const SamplerConfig& config,
                   ExternalLabeller labeller) {
  return run_oasis(pool, oracle, config, default_mixing_rule(), std::move(labeller));
}

RunTrace run_oasis(const Pool& pool, const OracleKind& oracle, const SamplerConfig& config,
                   MixingRule mixing, ExternalLabeller labeller) {
  OasisSampler sampler(pool, config, std::move(mixing));
  LabelLedger ledger = make_ledger(oracle, std::move(labeller));
  RunTrace trace;
  trace.strategy = Strategy::oasis;
  trace.records.reserve(config.iterations);
  while (!sampler.exhausted() && !budget_reached(config, ledger.distinct_labels_used())) {
    if (config.record_instrumental)
      trace.instrumental_history.push_back(sampler.instrumental().stratum_probs);
    const auto& draw = sampler.propose();
    const int label = ledger.query(pool[draw.pair_index]);
    trace.records.push_back(sampler.observe(label, ledger.distinct_labels_used()));
  }
  snapshot_model(sampler, trace);
  return trace;
}

RunTrace run_passive(const Pool& pool, const OracleKind& oracle, const SamplerConfig& config,
                     ExternalLabeller labeller) {
  config.validate();
  if (pool.empty()) throw Error(ErrorCategory::empty_pool, "pool is empty");
  Rng rng(derive_seed(config.seed, kSamplerStream));
  LabelLedger ledger = make_ledger(oracle, std::move(labeller));
  const auto cum = pool.uniform_marginal() ? std::vector<double>{} : cumulative(pool.marginal());
  SampleHistory history;
  RunTrace trace;
  trace.strategy = Strategy::passive;
  trace.records.reserve(config.iterations);
  for (std::size_t t = 1;
       t <= config.iterations && !budget_reached(config, ledger.distinct_labels_used()); ++t) {
    const std::size_t i = pool.uniform_marginal()
                              ? static_cast<std::size_t>(uniform_index(rng, pool.size()))
                              : draw_cumulative(rng, cum);
    const int label = ledger.query(pool[i]);
    const int prediction = pool[i].predicted_label;
    history.append({t, i, 1.0, label, prediction, -1});
    trace.records.push_back({t, i, -1, 1.0, label, prediction, ais_f_estimate(history, config.alpha),
                             ledger.distinct_labels_used()});
  }
  return trace;
}

RunTrace run_stratified(const Pool& pool, const OracleKind& oracle, const SamplerConfig& config,
                        ExternalLabeller labeller) {
  config.validate();
  const Strata strata = csf_stratify(pool, config.desired_K, config.histogram_bins);
  Rng rng(derive_seed(config.seed, kSamplerStream));
  LabelLedger ledger = make_ledger(oracle, std::move(labeller));
  const std::size_t K = strata.count();
  std::vector<std::vector<double>> within;
  if (!pool.uniform_marginal()) {
    for (const auto& members : strata.members) {
      std::vector<double> masses;
      for (auto i : members) masses.push_back(pool.marginal()[i]);
      within.push_back(cumulative(masses));
    }
  }
  std::vector<double> draws(K, 0.0), matches(K, 0.0);
  std::vector<std::optional<double>> means(K);
  const std::span<const double> omega(strata.weights.data(), K);
  const double omega_total = strata.weights.sum();
  RunTrace trace;
  trace.strategy = Strategy::stratified;
  trace.records.reserve(config.iterations);
  for (std::size_t t = 1;
       t <= config.iterations && !budget_reached(config, ledger.distinct_labels_used()); ++t) {
    const std::size_t k = categorical(rng, omega, omega_total);
    const auto& members = strata.members[k];
    const std::size_t i = pool.uniform_marginal()
                              ? members[static_cast<std::size_t>(uniform_index(rng, members.size()))]
                              : members[draw_cumulative(rng, within[k])];
    const int label = ledger.query(pool[i]);
    draws[k] += 1.0;
    matches[k] += label;
    means[k] = matches[k] / draws[k];
    trace.records.push_back({t, i, static_cast<int>(k), 1.0, label, pool[i].predicted_label,
                             stratified_f_estimate(means, strata, config.alpha),
                             ledger.distinct_labels_used()});
  }
  trace.final_instrumental = strata.weights;
  return trace;
}

std::vector<double> score_proxies(const Pool& pool, std::optional<double> tau) {
  std::vector<double> proxies(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double s = pool[i].score;
    proxies[i] = pool.scores_are_probabilities() ? s : logistic(s - tau.value_or(0.0));
  }
  return proxies;
}

RunTrace run_is(const Pool& pool, const OracleKind& oracle, const SamplerConfig& config,
                ExternalLabeller labeller) {
  config.validate();
  const Strata strata = csf_stratify(pool, config.desired_K, config.histogram_bins);
  const double eta = config.eta.value_or(2.0 * static_cast<double>(strata.count()));
  const double f_guess = initialize_model(pool, strata, config.alpha, config.tau, eta).initial_f;
  const auto proxies = score_proxies(pool, config.tau);
  const Eigen::Map<const Eigen::VectorXd> p(pool.marginal().data(),
                                            static_cast<Eigen::Index>(pool.size()));
  Eigen::VectorXd q_star;
  try {
    q_star = pairwise_optimal_dist(pool, proxies, f_guess, config.alpha);
  } catch (const Error& e) {
    if (e.category() != ErrorCategory::degenerate_distribution) throw;
    q_star = p;
  }
  const Eigen::VectorXd q = config.epsilon * p + (1.0 - config.epsilon) * q_star;
  const auto cum = cumulative(std::span<const double>(q.data(), pool.size()));

  Rng rng(derive_seed(config.seed, kSamplerStream));
  LabelLedger ledger = make_ledger(oracle, std::move(labeller));
  SampleHistory history;
  RunTrace trace;
  trace.strategy = Strategy::importance;
  trace.initial_f = f_guess;
  trace.records.reserve(config.iterations);
  for (std::size_t t = 1;
       t <= config.iterations && !budget_reached(config, ledger.distinct_labels_used()); ++t) {
    const std::size_t i = draw_cumulative(rng, cum);
    const auto ii = static_cast<Eigen::Index>(i);
    const double w = p(ii) / q(ii);
    const int label = ledger.query(pool[i]);
    const int prediction = pool[i].predicted_label;
    history.append({t, i, w, label, prediction, -1});
    trace.records.push_back({t, i, -1, w, label, prediction, ais_f_estimate(history, config.alpha),
                             ledger.distinct_labels_used()});
  }
  return trace;
}

RunTrace run_sampler(const Pool& pool, const OracleKind& oracle, const SamplerConfig& config,
                     ExternalLabeller labeller) {
  switch (config.strategy) {
    case Strategy::oasis: return run_oasis(pool, oracle, config, std::move(labeller));
    case Strategy::passive: return run_passive(pool, oracle, config, std::move(labeller));
    case Strategy::stratified: return run_stratified(pool, oracle, config, std::move(labeller));
    case Strategy::importance: return run_is(pool, oracle, config, std::move(labeller));
  }
  throw Error(ErrorCategory::parameter, "unknown strategy");
}

ExternalLabeller replay_labeller(std::vector<int> labels) {
  auto state = std::make_shared<std::pair<std::vector<int>, std::size_t>>(std::move(labels), 0);
  return [state](const PairRecord&) {
    auto& [seq, next] = *state;
    if (next >= seq.size())
      throw Error(ErrorCategory::exhausted, "replay label sequence exhausted");
    return seq[next++];
  };
}

}  // namespace oasis
