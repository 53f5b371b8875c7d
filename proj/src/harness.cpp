#include "oasis/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <thread>

#include "oasis/bayes_model.hpp"
#include "oasis/error.hpp"
#include "oasis/instrumental.hpp"
#include "oasis/random.hpp"
#include "oasis/trace_io.hpp"

namespace oasis {
namespace {

constexpr std::uint64_t kScoreStream = 11;
constexpr std::uint64_t kLabelStream = 12;
constexpr std::uint64_t kPredictionStream = 13;

double standard_normal(Rng& rng) {
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Marsaglia-Tsang, with the shape < 1 boost G(a) = G(a + 1) U^(1/a).
double gamma_variate(Rng& rng, double shape) {
  if (shape < 1.0) {
    const double u = 1.0 - uniform01(rng);
    return gamma_variate(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - uniform01(rng);
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

double symmetric_beta(Rng& rng, double shape) {
  if (shape == 1.0) return uniform01(rng);
  const double g1 = gamma_variate(rng, shape);
  const double g2 = gamma_variate(rng, shape);
  return g1 / (g1 + g2);
}

// Calibrated score mixture for a match rate <= 1/2.
std::vector<double> mixture_scores(Rng& rng, std::size_t N, double rate, double low_share,
                                   double shape) {
  // The Beta(a, a) component has mean 1/2 and carries (1 - low_share) of the
  // expected matches; the Beta(1, b) bulk carries the rest.
  const double uniform_fraction = std::min(1.0, 2.0 * (1.0 - low_share) * rate);
  const double bulk_fraction = 1.0 - uniform_fraction;
  const double bulk_mean =
      bulk_fraction > 0.0 ? std::clamp((rate - 0.5 * uniform_fraction) / bulk_fraction, 1e-9, 0.5)
                          : 0.5;
  const double b = 1.0 / bulk_mean - 1.0;
  std::vector<double> s(N);
  for (auto& x : s) {
    if (uniform01(rng) < uniform_fraction)
      x = symmetric_beta(rng, shape);
    else
      x = 1.0 - std::pow(1.0 - uniform01(rng), 1.0 / b);  // inverse CDF of Beta(1, b)
  }
  return s;
}

}  // namespace

Pool generate_synthetic_pool(const SyntheticPoolParams& p) {
  if (p.N == 0 || p.num_matches == 0 || p.num_matches > p.N)
    throw Error(ErrorCategory::parameter, "need 0 < num_matches <= N", "num_matches");
  if (!(p.noise >= 0.0)) throw Error(ErrorCategory::parameter, "noise must be >= 0", "noise");
  if (!(p.low_score_match_share >= 0.0 && p.low_score_match_share < 1.0))
    throw Error(ErrorCategory::parameter, "low_score_match_share must lie in [0,1)",
                "low_score_match_share");
  if (!(p.separation_shape > 0.0))
    throw Error(ErrorCategory::parameter, "separation_shape must be > 0", "separation_shape");
  if (!(p.raw_scale > 0.0)) throw Error(ErrorCategory::parameter, "raw_scale must be > 0", "raw_scale");

  Rng score_rng(derive_seed(p.seed, kScoreStream));
  const double rate = static_cast<double>(p.num_matches) / static_cast<double>(p.N);
  std::vector<double> s;
  if (rate <= 0.5) {
    s = mixture_scores(score_rng, p.N, rate, p.low_score_match_share, p.separation_shape);
  } else {
    s = mixture_scores(score_rng, p.N, 1.0 - rate, p.low_score_match_share, p.separation_shape);
    for (auto& x : s) x = 1.0 - x;
  }

  // Bernoulli(score) labels, then adjust to exactly num_matches.
  Rng label_rng(derive_seed(p.seed, kLabelStream));
  std::vector<int> labels(p.N);
  std::size_t count = 0;
  for (std::size_t i = 0; i < p.N; ++i) count += static_cast<std::size_t>(labels[i] = bernoulli(label_rng, s[i]));
  if (count > p.num_matches) {
    std::vector<std::size_t> ones;
    for (std::size_t i = 0; i < p.N; ++i)
      if (labels[i]) ones.push_back(i);
    for (std::size_t n = 0; n < count - p.num_matches; ++n) {
      const auto j = n + uniform_index(label_rng, ones.size() - n);
      std::swap(ones[n], ones[j]);
      labels[ones[n]] = 0;
    }
  } else if (count < p.num_matches) {
    // Weighted sampling without replacement among non-matches, weight = score
    // (exponential keys; ties at zero weight fall back to uniform order).
    std::vector<std::pair<double, std::size_t>> keys;
    for (std::size_t i = 0; i < p.N; ++i) {
      if (labels[i]) continue;
      const double u = 1.0 - uniform01(label_rng);
      const double key = s[i] > 0.0 ? -std::log(u) / s[i] : std::numeric_limits<double>::infinity();
      keys.emplace_back(key, i);
    }
    const auto need = p.num_matches - count;
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(need), keys.end());
    for (std::size_t n = 0; n < need; ++n) labels[keys[n].second] = 1;
  }

  Rng pred_rng(derive_seed(p.seed, kPredictionStream));
  std::vector<PairRecord> pairs(p.N);
  const int width = static_cast<int>(std::to_string(p.N - 1).size());
  for (std::size_t i = 0; i < p.N; ++i) {
    auto& r = pairs[i];
    std::string digits = std::to_string(i);
    r.pair_id = "p" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
    const double noisy = s[i] + (p.noise > 0.0 ? p.noise * standard_normal(pred_rng) : 0.0);
    r.predicted_label = noisy > 0.5 ? 1 : 0;
    r.true_label = labels[i];
    r.true_match_prob = s[i];
    if (p.score_model == ScoreModel::calibrated) {
      r.score = s[i];
    } else {
      const double c = std::clamp(s[i], 1e-6, 1.0 - 1e-6);
      r.score = p.raw_scale * std::log(c / (1.0 - c));
    }
  }
  return Pool(std::move(pairs), p.score_model == ScoreModel::calibrated);
}

Pool subsample_pool(const Pool& pool, std::size_t target_size, std::uint64_t seed) {
  if (target_size == 0 || target_size > pool.size())
    throw Error(ErrorCategory::parameter, "target size must lie in [1, N]", "target_size");
  Rng rng(seed);
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t n = 0; n < target_size; ++n) {
    const auto j = n + uniform_index(rng, idx.size() - n);
    std::swap(idx[n], idx[j]);
  }
  idx.resize(target_size);
  std::sort(idx.begin(), idx.end());
  std::vector<PairRecord> pairs;
  pairs.reserve(target_size);
  for (auto i : idx) pairs.push_back(pool[i]);
  return Pool(std::move(pairs), pool.scores_are_probabilities());
}

std::vector<RunTrace> run_replications(const Pool& pool, const OracleKind& oracle,
                                       const SamplerConfig& config, std::size_t replications,
                                       std::uint64_t seed_base, std::size_t workers) {
  std::vector<RunTrace> runs(replications);
  auto run_one = [&](std::size_t r) {
    SamplerConfig c = config;
    c.seed = seed_base + r;
    OracleKind o = oracle;
    o.rng_seed = derive_seed(oracle.rng_seed, seed_base + r);
    runs[r] = run_sampler(pool, o, c);
  };
  workers = std::max<std::size_t>(1, std::min(workers, replications));
  if (workers == 1) {
    for (std::size_t r = 0; r < replications; ++r) run_one(r);
    return runs;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool_threads;
  for (std::size_t w = 0; w < workers; ++w) {
    pool_threads.emplace_back([&, w] {
      try {
        for (std::size_t r; (r = next.fetch_add(1)) < replications;) run_one(r);
      } catch (...) {
        errors[w] = std::current_exception();
        next = replications;
      }
    });
  }
  for (auto& t : pool_threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return runs;
}

std::optional<double> estimate_at_budget(const RunTrace& trace, std::size_t budget) {
  const auto& rec = trace.records;
  auto it = std::upper_bound(rec.begin(), rec.end(), budget,
                             [](std::size_t b, const IterationRecord& r) { return b < r.budget; });
  if (it == rec.begin()) return std::nullopt;
  return std::prev(it)->f_estimate;
}

MetricSeries aggregate_metrics(const std::string& strategy, const std::vector<RunTrace>& runs,
                               double true_f, const std::vector<std::size_t>& budgets) {
  MetricSeries m;
  m.strategy = strategy;
  m.budgets = budgets;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (auto b : budgets) {
    std::vector<double> est;
    std::size_t reached = 0;
    for (const auto& run : runs) {
      if (run.final_budget() >= b) ++reached;
      if (auto e = estimate_at_budget(run, b)) est.push_back(*e);
    }
    double abs_err = nan, sd = nan;
    if (!est.empty()) {
      double err = 0.0, mean = 0.0;
      for (double e : est) {
        err += std::abs(e - true_f);
        mean += e;
      }
      abs_err = err / static_cast<double>(est.size());
      mean /= static_cast<double>(est.size());
      double var = 0.0;
      for (double e : est) var += (e - mean) * (e - mean);
      sd = std::sqrt(var / static_cast<double>(est.size()));
    }
    const double frac = runs.empty() ? 0.0 : static_cast<double>(est.size()) / static_cast<double>(runs.size());
    m.abs_err.push_back(abs_err);
    m.std_dev.push_back(sd);
    m.fraction_defined.push_back(frac);
    m.runs_reached.push_back(reached);
    if (!m.first_reliable_budget && frac >= kReliableFraction) m.first_reliable_budget = b;
  }
  return m;
}

std::optional<std::size_t> budget_to_reach(const MetricSeries& m, double threshold) {
  if (!m.first_reliable_budget) return std::nullopt;
  for (std::size_t i = 0; i < m.budgets.size(); ++i) {
    if (m.budgets[i] < *m.first_reliable_budget) continue;
    if (m.abs_err[i] <= threshold) return m.budgets[i];
  }
  return std::nullopt;
}

void write_metrics(std::ostream& out, const MetricSeries& m) {
  out << "budget,abs_err,std_dev,fraction_defined,runs_reached,plotted\n";
  for (std::size_t i = 0; i < m.budgets.size(); ++i) {
    const bool plotted = m.first_reliable_budget && m.budgets[i] >= *m.first_reliable_budget;
    out << m.budgets[i] << ',';
    if (!std::isnan(m.abs_err[i])) out << format_real(m.abs_err[i]);
    out << ',';
    if (!std::isnan(m.std_dev[i])) out << format_real(m.std_dev[i]);
    out << ',' << format_real(m.fraction_defined[i]) << ',' << m.runs_reached[i] << ','
        << (plotted ? 1 : 0) << '\n';
  }
}

double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw Error(ErrorCategory::parameter, "KL needs equal-length vectors");
  double kl = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) <= 0.0) continue;
    if (q(k) <= 0.0) return std::numeric_limits<double>::infinity();
    kl += p(k) * std::log(p(k) / q(k));
  }
  return kl;
}

Eigen::VectorXd true_stratum_rates(const Pool& pool, const Strata& strata) {
  Eigen::VectorXd pi(static_cast<Eigen::Index>(strata.count()));
  for (std::size_t k = 0; k < strata.count(); ++k) {
    double matches = 0.0, mass = 0.0;
    for (auto i : strata.members[k]) {
      if (!pool[i].true_label)
        throw Error(ErrorCategory::incomplete_ground_truth,
                    "pair '" + pool[i].pair_id + "' has no true_label", "true_label");
      const double w = pool.uniform_marginal() ? 1.0 : pool.marginal()[i];
      matches += w * *pool[i].true_label;
      mass += w;
    }
    pi(static_cast<Eigen::Index>(k)) = mass > 0.0 ? matches / mass : 0.0;
  }
  return pi;
}

std::vector<KlPoint> kl_to_optimal(const RunTrace& run, const Pool& truth, const Strata& strata,
                                   double alpha, bool prior_decay, std::size_t stride) {
  if (run.prior_pi0.size() != static_cast<Eigen::Index>(strata.count()))
    throw Error(ErrorCategory::parameter,
                "run carries no prior matching the strata (KL needs an OASIS run)", "prior_pi0");
  if (stride == 0) stride = 1;
  const Eigen::VectorXd pi_true = true_stratum_rates(truth, strata);
  const double f_true = true_f_measure(truth, alpha);
  const Eigen::VectorXd v_true =
      optimal_stratum_weights(strata.weights, strata.mean_predictions, pi_true, f_true, alpha);
  const auto K = static_cast<double>(strata.count());

  PosteriorMatrix<double> post(run.prior_pi0, run.eta);
  WeightedSums sums;
  std::vector<KlPoint> out;
  for (std::size_t n = 0; n < run.records.size(); ++n) {
    const auto& r = run.records[n];
    if (r.stratum < 0 || static_cast<std::size_t>(r.stratum) >= strata.count())
      throw Error(ErrorCategory::validation, "trace record has no valid stratum", "stratum", n + 1);
    post.update(r.stratum, r.label, prior_decay);
    sums.tp += r.weight * (r.label * r.prediction);
    sums.predicted += r.weight * r.prediction;
    sums.actual += r.weight * r.label;
    if ((n + 1) % stride != 0 && n + 1 != run.records.size()) continue;
    const double f = ais_f_estimate(sums, alpha).value_or(run.initial_f.value_or(0.0));
    const Eigen::VectorXd pi_hat = post.means();
    const Eigen::VectorXd v_hat =
        optimal_stratum_weights(strata.weights, strata.mean_predictions, pi_hat, f, alpha);
    out.push_back({r.t, r.budget, kl_divergence(v_true, v_hat),
                   (pi_hat - pi_true).cwiseAbs().sum() / K, (v_hat - v_true).cwiseAbs().sum() / K});
  }
  return out;
}

void ExperimentSpec::validate() const {
  if (!pool || pool->empty()) throw Error(ErrorCategory::empty_pool, "experiment needs a pool");
  if (replications < 1) throw Error(ErrorCategory::parameter, "replications must be >= 1", "replications");
  if (strategies.empty()) throw Error(ErrorCategory::parameter, "no strategies requested", "strategies");
  if (budgets.empty()) throw Error(ErrorCategory::parameter, "budget grid is empty", "budgets");
  for (auto s : strategies) {
    auto it = configs.find(s);
    if (it == configs.end())
      throw Error(ErrorCategory::parameter, std::string("no config for strategy ") + to_string(s),
                  "strategies");
    it->second.validate();
  }
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult result;
  for (auto s : spec.strategies) {
    SamplerConfig config = spec.configs.at(s);
    config.strategy = s;
    double true_f = 0.0;
    try {
      true_f = true_f_measure(*spec.pool, config.alpha);
    } catch (const Error& e) {
      if (e.category() == ErrorCategory::incomplete_ground_truth)
        throw Error(ErrorCategory::incomplete_ground_truth,
                    "cannot score experiment: pool lacks ground truth (" + std::string(e.what()) + ")");
      throw;
    }
    result.true_f = true_f;
    auto runs = run_replications(*spec.pool, spec.oracle, config, spec.replications,
                                 spec.seed_base, spec.workers);
    result.metrics.push_back(aggregate_metrics(to_string(s), runs, true_f, spec.budgets));
    if (spec.keep_traces) result.traces.emplace(s, std::move(runs));
  }
  return result;
}

std::vector<std::size_t> budget_grid(std::size_t step, std::size_t max_budget) {
  if (step == 0) throw Error(ErrorCategory::parameter, "budget step must be >= 1", "budget_step");
  std::vector<std::size_t> g;
  for (std::size_t b = step; b <= max_budget; b += step) g.push_back(b);
  return g;
}

}  // namespace oasis
