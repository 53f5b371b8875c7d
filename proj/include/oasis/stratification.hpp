#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "oasis/pool.hpp"

namespace oasis {

inline constexpr std::size_t kDefaultStrata = 30;
inline constexpr std::size_t kDefaultHistogramBins = 1000;

// Partition of a pool into K nonempty, score-ordered strata.
//
// Stratum indices are 0-based. weights(k) is the marginal mass of stratum k
// (|P_k|/N under a uniform marginal) and mean_predictions(k) the
// marginal-weighted fraction of predicted matches in it.
struct Strata {
  std::vector<int> allocations;                // pair index -> stratum
  std::vector<std::vector<std::size_t>> members;  // stratum -> pair indices, ascending
  std::vector<std::size_t> sizes;
  Eigen::VectorXd weights;
  Eigen::VectorXd mean_predictions;
  std::vector<double> bin_edges;               // K + 1 ascending score boundaries

  std::size_t count() const noexcept { return sizes.size(); }
};

// Cumulative sqrt(F) stratification over an M-bin equal-width score histogram.
// May return fewer than desired_K strata.
Strata csf_stratify(const Pool& pool, std::size_t desired_K = kDefaultStrata,
                    std::size_t histogram_bins = kDefaultHistogramBins);

// Score-sorted split into min(desired_K, N) contiguous groups whose sizes
// differ by at most one (larger groups first). Ties broken by pool order.
Strata equal_size_stratify(const Pool& pool, std::size_t desired_K = kDefaultStrata);

// Builds the derived fields from per-pair allocations; empty strata are dropped
// and the rest renumbered contiguously. Exposed for tests and diagnostics.
Strata strata_from_allocations(const Pool& pool, std::vector<int> allocations,
                               std::vector<double> bin_edges);

// Debug dump: index, size, weight, mean score, mean prediction.
void write_strata_summary(std::ostream& out, const Pool& pool, const Strata& strata);

}  // namespace oasis
