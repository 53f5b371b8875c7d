#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "oasis/pool.hpp"

namespace oasis::test {

struct Row {
  double score;
  int predicted;
  std::optional<int> truth;
  std::optional<double> prob = std::nullopt;
};

inline Pool make_pool(const std::vector<Row>& rows, bool probabilities = true) {
  std::vector<PairRecord> pairs;
  for (std::size_t i = 0; i < rows.size(); ++i)
    pairs.push_back({"z" + std::to_string(i), rows[i].score, rows[i].predicted, rows[i].truth, rows[i].prob});
  return Pool(std::move(pairs), probabilities);
}

// Pool with the given confusion counts plus tn true negatives; scores follow labels.
inline Pool confusion_pool(int tp, int fp, int fn, int tn) {
  std::vector<Row> rows;
  for (int i = 0; i < tp; ++i) rows.push_back({0.9, 1, 1});
  for (int i = 0; i < fp; ++i) rows.push_back({0.7, 1, 0});
  for (int i = 0; i < fn; ++i) rows.push_back({0.3, 0, 1});
  for (int i = 0; i < tn; ++i) rows.push_back({0.1, 0, 0});
  return make_pool(rows);
}

// Predictions equal truth; scores spread over [0,1].
inline Pool perfect_pool(int n, int matches) {
  std::vector<Row> rows;
  for (int i = 0; i < n; ++i) {
    const int l = i < matches ? 1 : 0;
    rows.push_back({l ? 0.6 + 0.4 * i / n : 0.4 * i / n, l, l});
  }
  return make_pool(rows);
}

// Upper 0.1% point of chi-square with df degrees of freedom (Wilson-Hilferty).
inline double chi2_critical_0001(double df) {
  const double z = 3.090232306167813;
  const double a = 2.0 / (9.0 * df);
  return df * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
}

}  // namespace oasis::test
