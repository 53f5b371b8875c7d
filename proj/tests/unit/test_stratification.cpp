#include <algorithm>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "oasis/error.hpp"
#include "oasis/random.hpp"
#include "oasis/stratification.hpp"

using namespace oasis;
using oasis::test::make_pool;
using oasis::test::Row;

namespace {

Pool scores_pool(const std::vector<double>& scores, bool probabilities = true) {
  std::vector<Row> rows;
  for (std::size_t i = 0; i < scores.size(); ++i) rows.push_back({scores[i], i % 2 == 0 ? 1 : 0, 0});
  return make_pool(rows, probabilities);
}

void check_invariants(const Pool& pool, const Strata& s) {
  ASSERT_EQ(s.allocations.size(), pool.size());
  EXPECT_EQ(std::accumulate(s.sizes.begin(), s.sizes.end(), std::size_t{0}), pool.size());
  EXPECT_NEAR(s.weights.sum(), 1.0, 1e-9);
  ASSERT_EQ(s.bin_edges.size(), s.count() + 1);
  EXPECT_TRUE(std::is_sorted(s.bin_edges.begin(), s.bin_edges.end()));
  for (std::size_t k = 0; k < s.count(); ++k) {
    EXPECT_GT(s.sizes[k], 0u);
    ASSERT_EQ(s.members[k].size(), s.sizes[k]);
    double preds = 0;
    for (auto i : s.members[k]) {
      EXPECT_EQ(s.allocations[i], static_cast<int>(k));
      EXPECT_GE(pool[i].score, s.bin_edges[k]);
      EXPECT_LE(pool[i].score, s.bin_edges[k + 1]);
      preds += pool[i].predicted_label;
    }
    EXPECT_NEAR(s.mean_predictions(k), preds / s.sizes[k], 1e-12);
  }
  // Stratum index nondecreasing in score.
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pool[a].score < pool[b].score; });
  for (std::size_t i = 1; i < order.size(); ++i)
    EXPECT_LE(s.allocations[order[i - 1]], s.allocations[order[i]]);
}

}  // namespace

TEST(Csf, GoldenTrace) {
  const Pool p = scores_pool({0.1, 0.1, 0.1, 0.1, 0.5, 0.9});
  const Strata s = csf_stratify(p, 2, 3);
  ASSERT_EQ(s.count(), 2u);
  EXPECT_EQ(s.sizes, (std::vector<std::size_t>{4, 2}));
  EXPECT_EQ(s.allocations, (std::vector<int>{0, 0, 0, 0, 1, 1}));
  EXPECT_DOUBLE_EQ(s.weights(0), 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(s.weights(1), 2.0 / 6.0);
  check_invariants(p, s);
}

TEST(Csf, IdenticalScoresGiveOneStratum) {
  const Pool p = scores_pool({0.4, 0.4, 0.4, 0.4});
  const Strata s = csf_stratify(p, 5, 100);
  EXPECT_EQ(s.count(), 1u);
  EXPECT_DOUBLE_EQ(s.weights(0), 1.0);
  EXPECT_DOUBLE_EQ(s.mean_predictions(0), 0.5);
}

TEST(Csf, ParameterErrors) {
  const Pool p = scores_pool({0.1, 0.2});
  EXPECT_THROW(csf_stratify(p, 0, 10), Error);
  EXPECT_THROW(csf_stratify(p, 2, 0), Error);
  EXPECT_THROW(equal_size_stratify(p, 0), Error);
  EXPECT_THROW(csf_stratify(Pool{}, 2, 10), Error);
  EXPECT_THROW(equal_size_stratify(Pool{}, 2), Error);
}

TEST(Csf, NeverExceedsDesiredK) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + uniform_index(rng, 200);
    std::vector<double> scores(n);
    for (auto& s : scores) s = std::pow(uniform01(rng), 3.0);
    const Pool p = scores_pool(scores);
    for (std::size_t K : {std::size_t{1}, std::size_t{3}, n}) {
      const Strata s = csf_stratify(p, K, 1 + uniform_index(rng, 500));
      EXPECT_LE(s.count(), K);
      check_invariants(p, s);
    }
  }
}

TEST(Csf, Deterministic) {
  Rng rng(3);
  std::vector<double> scores(500);
  for (auto& s : scores) s = uniform01(rng);
  const Pool p = scores_pool(scores);
  const Strata a = csf_stratify(p, 30, 1000), b = csf_stratify(p, 30, 1000);
  EXPECT_EQ(a.allocations, b.allocations);
  EXPECT_EQ(a.bin_edges, b.bin_edges);
}

TEST(Csf, RawScoresWork) {
  const Pool p = scores_pool({-3.0, -2.5, -2.5, 0.0, 4.0, 7.5}, false);
  const Strata s = csf_stratify(p, 3, 20);
  check_invariants(p, s);
}

// Heavy-tailed scores: CSF should usually beat a random contiguous split on
// the sum of stratum weight times within-stratum standard deviation.
TEST(Csf, BeatsRandomContiguousSplits) {
  Rng rng(11);
  const std::size_t K = 10;
  int wins = 0;
  const int trials = 100;
  auto within_var = [](const std::vector<std::vector<double>>& groups) {
    double total = 0, n = 0;
    for (const auto& g : groups) {
      double m = 0;
      for (double x : g) m += x;
      m /= g.size();
      double v = 0;
      for (double x : g) v += (x - m) * (x - m);
      total += g.size() * std::sqrt(v / g.size());
      n += g.size();
    }
    return total / n;
  };
  for (int t = 0; t < trials; ++t) {
    std::vector<double> scores(2000);
    for (auto& s : scores) s = 1.0 / std::pow(1.0 - uniform01(rng), 0.7);  // Pareto tail
    const Pool p = scores_pool(scores, false);
    const Strata s = csf_stratify(p, K, 1000);
    std::vector<std::vector<double>> csf_groups(s.count());
    for (std::size_t i = 0; i < p.size(); ++i) csf_groups[s.allocations[i]].push_back(p[i].score);

    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> cuts;
    while (cuts.size() < s.count() - 1) {
      const std::size_t c = 1 + uniform_index(rng, sorted.size() - 1);
      if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(sorted.size());
    std::vector<std::vector<double>> rnd;
    std::size_t start = 0;
    for (auto c : cuts) {
      rnd.emplace_back(sorted.begin() + start, sorted.begin() + c);
      start = c;
    }
    if (within_var(csf_groups) <= within_var(rnd)) ++wins;
  }
  EXPECT_GE(wins, 90);
}

TEST(EqualSize, Sizes) {
  EXPECT_EQ(equal_size_stratify(scores_pool({.1, .2, .3, .4, .5, .6}), 3).sizes,
            (std::vector<std::size_t>{2, 2, 2}));
  EXPECT_EQ(equal_size_stratify(scores_pool({.1, .2, .3, .4, .5, .6, .7}), 3).sizes,
            (std::vector<std::size_t>{3, 2, 2}));
}

TEST(EqualSize, SingletonsOrderedByScore) {
  const Pool p = scores_pool({0.5, 0.1, 0.9, 0.3, 0.7});
  const Strata s = equal_size_stratify(p, 5);
  ASSERT_EQ(s.count(), 5u);
  EXPECT_EQ(s.allocations, (std::vector<int>{2, 0, 4, 1, 3}));
  check_invariants(p, s);
}

TEST(EqualSize, MoreStrataThanPairs) {
  const Pool p = scores_pool({0.5, 0.1});
  EXPECT_EQ(equal_size_stratify(p, 10).count(), 2u);
}

TEST(Strata, EmptyStrataDropped) {
  const Pool p = scores_pool({0.1, 0.2, 0.8});
  const Strata s = strata_from_allocations(p, {0, 0, 3}, {0.0, 0.25, 0.5, 0.75, 1.0});
  ASSERT_EQ(s.count(), 2u);
  EXPECT_EQ(s.allocations, (std::vector<int>{0, 0, 1}));
  EXPECT_EQ(s.bin_edges, (std::vector<double>{0.0, 0.25, 1.0}));
}

TEST(Strata, WeightsFollowMarginal) {
  std::vector<PairRecord> pairs = {{"a", 0.1, 0, 0, {}}, {"b", 0.2, 0, 0, {}}, {"c", 0.9, 1, 1, {}}};
  const Pool p(pairs, {0.5, 0.25, 0.25}, true);
  const Strata s = equal_size_stratify(p, 2);
  EXPECT_DOUBLE_EQ(s.weights(0), 0.75);
  EXPECT_DOUBLE_EQ(s.weights(1), 0.25);
  std::ostringstream os;
  write_strata_summary(os, p, s);
  EXPECT_FALSE(os.str().empty());
}
