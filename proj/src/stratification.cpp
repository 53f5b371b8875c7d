#include "oasis/stratification.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "oasis/error.hpp"

namespace oasis {
namespace {

void check_pool(const Pool& pool) {
  if (pool.empty()) throw Error(ErrorCategory::empty_pool, "cannot stratify an empty pool");
}

}  // namespace

Strata strata_from_allocations(const Pool& pool, std::vector<int> allocations,
                               std::vector<double> bin_edges) {
  const int raw_k = allocations.empty() ? 0 : *std::max_element(allocations.begin(), allocations.end()) + 1;
  std::vector<std::size_t> raw_sizes(static_cast<std::size_t>(raw_k), 0);
  for (int a : allocations) ++raw_sizes[static_cast<std::size_t>(a)];

  // Renumber, dropping empty strata together with their upper boundary.
  std::vector<int> remap(raw_sizes.size(), -1);
  std::vector<double> edges;
  int next = 0;
  for (std::size_t k = 0; k < raw_sizes.size(); ++k) {
    if (raw_sizes[k] == 0) continue;
    if (edges.empty()) edges.push_back(bin_edges[k]);
    remap[k] = next++;
    edges.push_back(bin_edges[k + 1]);
  }
  for (int& a : allocations) a = remap[static_cast<std::size_t>(a)];

  Strata s;
  s.allocations = std::move(allocations);
  s.bin_edges = std::move(edges);
  const auto K = static_cast<std::size_t>(next);
  s.members.resize(K);
  for (std::size_t i = 0; i < s.allocations.size(); ++i)
    s.members[static_cast<std::size_t>(s.allocations[i])].push_back(i);
  s.sizes.resize(K);
  s.weights.resize(static_cast<Eigen::Index>(K));
  s.mean_predictions.resize(static_cast<Eigen::Index>(K));
  const double N = static_cast<double>(pool.size());
  for (std::size_t k = 0; k < K; ++k) {
    const auto& m = s.members[k];
    s.sizes[k] = m.size();
    const auto ki = static_cast<Eigen::Index>(k);
    if (pool.uniform_marginal()) {
      std::size_t predicted = 0;
      for (auto i : m) predicted += static_cast<std::size_t>(pool[i].predicted_label);
      s.weights(ki) = static_cast<double>(m.size()) / N;
      s.mean_predictions(ki) = static_cast<double>(predicted) / static_cast<double>(m.size());
    } else {
      double mass = 0.0;
      double predicted = 0.0;
      for (auto i : m) {
        mass += pool.marginal()[i];
        predicted += pool.marginal()[i] * pool[i].predicted_label;
      }
      s.weights(ki) = mass;
      s.mean_predictions(ki) = mass > 0.0 ? predicted / mass : 0.0;
    }
  }
  return s;
}

Strata csf_stratify(const Pool& pool, std::size_t desired_K, std::size_t M) {
  if (desired_K < 1) throw Error(ErrorCategory::parameter, "desired_K must be >= 1", "desired_K");
  if (M < 1) throw Error(ErrorCategory::parameter, "histogram bins must be >= 1", "histogram_bins");
  check_pool(pool);

  const auto& pairs = pool.pairs();
  const auto [lo_it, hi_it] = std::minmax_element(
      pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.score < b.score; });
  const double lo = lo_it->score;
  const double hi = hi_it->score;
  if (!(hi > lo)) {
    return strata_from_allocations(pool, std::vector<int>(pool.size(), 0), {lo, hi});
  }

  // Equal-width histogram; bins are [e_j, e_{j+1}) except the last, which is closed.
  const double width = (hi - lo) / static_cast<double>(M);
  auto bin_of = [&](double s) {
    const auto j = static_cast<std::size_t>((s - lo) / (hi - lo) * static_cast<double>(M));
    return std::min(j, M - 1);
  };
  std::vector<std::size_t> counts(M, 0);
  std::vector<std::size_t> pair_bin(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    pair_bin[i] = bin_of(pairs[i].score);
    ++counts[pair_bin[i]];
  }
  auto edge = [&](std::size_t j) { return j == M ? hi : lo + static_cast<double>(j) * width; };

  std::vector<double> csf(M);
  double acc = 0.0;
  for (std::size_t j = 0; j < M; ++j) {
    acc += std::sqrt(static_cast<double>(counts[j]));
    csf[j] = acc;
  }
  const double csf_width = csf[M - 1] / static_cast<double>(desired_K);

  // Walk the histogram, opening a new stratum at the left edge of bin j once
  // the cumulative sqrt count through bin j reaches the next csf boundary.
  // The cap closes the final stratum at the top of the score range.
  std::vector<std::size_t> starts;  // histogram bin index at which each stratum begins
  std::size_t placed = 0;
  for (std::size_t j = 0; j < M; ++j) {
    if (placed == desired_K || j == M - 1) break;
    if (csf[j] >= static_cast<double>(placed) * csf_width) {
      starts.push_back(j);
      ++placed;
    }
  }
  if (starts.empty()) starts.push_back(0);  // M == 1

  std::vector<int> bin_stratum(M);
  for (std::size_t j = 0, k = 0; j < M; ++j) {
    while (k + 1 < starts.size() && j >= starts[k + 1]) ++k;
    bin_stratum[j] = static_cast<int>(k);
  }
  std::vector<int> allocations(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) allocations[i] = bin_stratum[pair_bin[i]];

  std::vector<double> edges;
  edges.reserve(starts.size() + 1);
  for (auto j : starts) edges.push_back(edge(j));
  edges.push_back(hi);
  return strata_from_allocations(pool, std::move(allocations), std::move(edges));
}

Strata equal_size_stratify(const Pool& pool, std::size_t desired_K) {
  if (desired_K < 1) throw Error(ErrorCategory::parameter, "desired_K must be >= 1", "desired_K");
  check_pool(pool);
  const std::size_t N = pool.size();
  const std::size_t K = std::min(desired_K, N);

  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return pool[a].score < pool[b].score; });

  std::vector<int> allocations(N);
  std::vector<double> edges;
  const std::size_t base = N / K;
  const std::size_t extra = N % K;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t len = base + (k < extra ? 1 : 0);
    edges.push_back(pool[order[pos]].score);
    for (std::size_t n = 0; n < len; ++n) allocations[order[pos++]] = static_cast<int>(k);
  }
  edges.push_back(pool[order[N - 1]].score);
  return strata_from_allocations(pool, std::move(allocations), std::move(edges));
}

void write_strata_summary(std::ostream& out, const Pool& pool, const Strata& strata) {
  out << "stratum,size,weight,mean_score,mean_prediction\n";
  for (std::size_t k = 0; k < strata.count(); ++k) {
    double score = 0.0;
    for (auto i : strata.members[k]) score += pool[i].score;
    score /= static_cast<double>(strata.sizes[k]);
    const auto ki = static_cast<Eigen::Index>(k);
    out << k << ',' << strata.sizes[k] << ',' << strata.weights(ki) << ',' << score << ','
        << strata.mean_predictions(ki) << '\n';
  }
}

}  // namespace oasis
