#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace oasis {

struct PairRecord {
  std::string pair_id;
  double score = 0.0;
  int predicted_label = 0;
  std::optional<int> true_label;
  std::optional<double> true_match_prob;
};

enum class ScoreKind { automatic, probability, raw };

struct FormatOptions {
  char delimiter = ',';
  ScoreKind score_kind = ScoreKind::automatic;
};

// Immutable, validated collection of scored record pairs together with the
// marginal mass p(z) each pair carries in the target F-measure.
class Pool {
 public:
  Pool() = default;

  // Uniform marginal 1/N. Validates every record and id uniqueness.
  Pool(std::vector<PairRecord> pairs, bool scores_are_probabilities);
  Pool(std::vector<PairRecord> pairs, std::vector<double> marginal, bool scores_are_probabilities);

  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }
  const std::vector<PairRecord>& pairs() const noexcept { return pairs_; }
  const PairRecord& operator[](std::size_t i) const { return pairs_[i]; }

  const std::vector<double>& marginal() const noexcept { return marginal_; }
  bool uniform_marginal() const noexcept { return uniform_; }
  bool scores_are_probabilities() const noexcept { return scores_are_probabilities_; }

  std::optional<std::size_t> index_of(const std::string& pair_id) const;

 private:
  void validate_and_index();

  std::vector<PairRecord> pairs_;
  std::vector<double> marginal_;
  bool uniform_ = true;
  bool scores_are_probabilities_ = false;
  std::unordered_map<std::string, std::size_t> index_;
};

// Splits one delimited line, honouring double-quoted cells.
std::vector<std::string> split_csv_line(std::string_view line, char delim);

Pool read_pool(std::istream& in, const FormatOptions& options = {});
Pool load_pool(const std::string& path, const FormatOptions& options = {});

// Writes the header plus every populated field; absent optionals become empty cells.
void write_pool(std::ostream& out, const Pool& pool, char delimiter = ',');
void save_pool(const std::string& path, const Pool& pool, char delimiter = ',');

struct ConfusionCounts {
  double tp = 0.0;
  double fp = 0.0;
  double fn = 0.0;
};

// Exhaustive TP/FP/FN mass over the pool (plain counts for a uniform marginal).
ConfusionCounts confusion_counts(const Pool& pool);

double f_measure(const ConfusionCounts& counts, double alpha);

// Ground-truth F_alpha over the whole pool. Requires true_label everywhere.
double true_f_measure(const Pool& pool, double alpha);

}  // namespace oasis
