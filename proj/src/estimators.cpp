#include "oasis/estimators.hpp"

#include <cmath>

#include "oasis/error.hpp"

namespace oasis {

void SampleHistory::append(const SampleEntry& e) {
  if (!(e.weight > 0.0) || !std::isfinite(e.weight))
    throw Error(ErrorCategory::domain, "importance weights must be positive and finite", "weight");
  entries_.push_back(e);
  sums_.tp += e.weight * (e.label * e.prediction);
  sums_.predicted += e.weight * e.prediction;
  sums_.actual += e.weight * e.label;
}

std::optional<double> ais_f_estimate(const WeightedSums& s, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw Error(ErrorCategory::domain, "alpha must lie in [0,1]", "alpha");
  const double denom = alpha * s.predicted + (1.0 - alpha) * s.actual;
  if (!(denom > 0.0)) return std::nullopt;
  return s.tp / denom;
}

std::optional<double> ais_f_estimate(const SampleHistory& history, double alpha) {
  return ais_f_estimate(history.sums(), alpha);
}

double ais_mean_estimate(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size() || values.empty())
    throw Error(ErrorCategory::parameter, "values and weights must be nonempty and equal length");
  double acc = 0.0;
  for (std::size_t t = 0; t < values.size(); ++t) acc += weights[t] * values[t];
  return acc / static_cast<double>(values.size());
}

std::optional<double> stratified_f_estimate(std::span<const std::optional<double>> label_means,
                                            const Strata& strata, double alpha) {
  if (label_means.size() != strata.count())
    throw Error(ErrorCategory::parameter, "one label mean per stratum required", "label_means");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw Error(ErrorCategory::domain, "alpha must lie in [0,1]", "alpha");
  double tp = 0.0, predicted = 0.0, actual = 0.0;
  for (std::size_t k = 0; k < label_means.size(); ++k) {
    if (!label_means[k]) continue;
    const auto ki = static_cast<Eigen::Index>(k);
    const double w = strata.weights(ki);
    const double lambda = strata.mean_predictions(ki);
    const double pi = *label_means[k];
    tp += w * pi * lambda;
    predicted += w * lambda;
    actual += w * pi;
  }
  const double denom = alpha * predicted + (1.0 - alpha) * actual;
  if (!(denom > 0.0)) return std::nullopt;
  return tp / denom;
}

double alpha_from_beta(double beta) {
  if (!(beta >= 0.0)) throw Error(ErrorCategory::domain, "beta must be nonnegative", "beta");
  return 1.0 / (1.0 + beta * beta);
}

}  // namespace oasis
