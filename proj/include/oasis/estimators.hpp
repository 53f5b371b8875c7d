#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "oasis/stratification.hpp"

namespace oasis {

struct SampleEntry {
  std::size_t iteration = 0;  // 1-based
  std::size_t pair_index = 0;
  double weight = 0.0;
  int label = 0;
  int prediction = 0;
  int stratum = -1;  // -1 when the sampler does not stratify
};

// Importance-weighted sums feeding the ratio estimator.
struct WeightedSums {
  double tp = 0.0;         // sum w * label * prediction
  double predicted = 0.0;  // sum w * prediction
  double actual = 0.0;     // sum w * label
};

class SampleHistory {
 public:
  void append(const SampleEntry& e);

  const std::vector<SampleEntry>& entries() const noexcept { return entries_; }
  const WeightedSums& sums() const noexcept { return sums_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

 private:
  std::vector<SampleEntry> entries_;
  WeightedSums sums_;
};

// Ratio estimator sum(w l lh) / (alpha sum(w lh) + (1 - alpha) sum(w l)).
// Empty optional when the denominator is zero.
std::optional<double> ais_f_estimate(const WeightedSums& sums, double alpha);
std::optional<double> ais_f_estimate(const SampleHistory& history, double alpha);

inline std::optional<double> ais_precision(const SampleHistory& h) { return ais_f_estimate(h, 1.0); }
inline std::optional<double> ais_recall(const SampleHistory& h) { return ais_f_estimate(h, 0.0); }

// (1/T) sum w_t f(x_t).
double ais_mean_estimate(std::span<const double> values, std::span<const double> weights);

// Plug-in estimate over strata from empirical per-stratum label means.
// Strata without samples are left out of every sum; the estimate is undefined
// when the remaining denominator is zero.
std::optional<double> stratified_f_estimate(std::span<const std::optional<double>> label_means,
                                            const Strata& strata, double alpha);

double alpha_from_beta(double beta);

}  // namespace oasis
