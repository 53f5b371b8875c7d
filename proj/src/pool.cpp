#include "oasis/pool.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "oasis/error.hpp"

namespace oasis {
namespace {

constexpr double kMarginalTolerance = 1e-9;

void validate_record(const PairRecord& r, std::optional<std::size_t> row) {
  if (!std::isfinite(r.score))
    throw Error(ErrorCategory::validation, "score must be finite for pair '" + r.pair_id + "'",
                "score", row);
  if (r.predicted_label != 0 && r.predicted_label != 1)
    throw Error(ErrorCategory::validation, "predicted_label must be 0 or 1", "predicted_label", row);
  if (r.true_label && *r.true_label != 0 && *r.true_label != 1)
    throw Error(ErrorCategory::validation, "true_label must be 0 or 1", "true_label", row);
  if (r.true_match_prob && !(*r.true_match_prob >= 0.0 && *r.true_match_prob <= 1.0))
    throw Error(ErrorCategory::validation, "true_match_prob must lie in [0,1]", "true_match_prob",
                row);
}

std::string quote_if_needed(const std::string& s, char delim) {
  if (s.find_first_of(std::string{delim, '"', '\n', '\r'}) == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

double parse_real(const std::string& cell, const char* field, std::size_t row) {
  double v = 0.0;
  const auto* first = cell.data();
  const auto* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw Error(ErrorCategory::validation, std::string("cannot parse ") + field + " '" + cell + "'",
                field, row);
  return v;
}

int parse_binary(const std::string& cell, const char* field, std::size_t row) {
  if (cell == "0") return 0;
  if (cell == "1") return 1;
  throw Error(ErrorCategory::validation,
              std::string(field) + " must be 0 or 1, got '" + cell + "' at row " +
                  std::to_string(row),
              field, row);
}

std::string shortest_repr(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line, char delim) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

Pool::Pool(std::vector<PairRecord> pairs, bool scores_are_probabilities)
    : pairs_(std::move(pairs)), uniform_(true), scores_are_probabilities_(scores_are_probabilities) {
  if (pairs_.empty()) throw Error(ErrorCategory::empty_pool, "pool must contain at least one pair");
  marginal_.assign(pairs_.size(), 1.0 / static_cast<double>(pairs_.size()));
  validate_and_index();
}

Pool::Pool(std::vector<PairRecord> pairs, std::vector<double> marginal, bool scores_are_probabilities)
    : pairs_(std::move(pairs)),
      marginal_(std::move(marginal)),
      uniform_(false),
      scores_are_probabilities_(scores_are_probabilities) {
  if (pairs_.empty()) throw Error(ErrorCategory::empty_pool, "pool must contain at least one pair");
  if (marginal_.size() != pairs_.size())
    throw Error(ErrorCategory::parameter, "marginal length must equal the number of pairs",
                "marginal");
  double total = 0.0;
  for (double m : marginal_) {
    if (!(m >= 0.0) || !std::isfinite(m))
      throw Error(ErrorCategory::validation, "marginal masses must be finite and nonnegative",
                  "marginal");
    total += m;
  }
  if (std::abs(total - 1.0) > kMarginalTolerance)
    throw Error(ErrorCategory::validation, "marginal masses must sum to 1", "marginal");
  validate_and_index();
}

void Pool::validate_and_index() {
  index_.reserve(pairs_.size());
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    validate_record(pairs_[i], i + 1);
    if (!index_.emplace(pairs_[i].pair_id, i).second)
      throw Error(ErrorCategory::validation, "duplicate pair_id '" + pairs_[i].pair_id + "'",
                  "pair_id", i + 1);
  }
}

std::optional<std::size_t> Pool::index_of(const std::string& pair_id) const {
  auto it = index_.find(pair_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Pool read_pool(std::istream& in, const FormatOptions& options) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCategory::schema, "missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line, options.delimiter);

  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  };
  const auto id_col = column("pair_id");
  const auto score_col = column("score");
  const auto pred_col = column("predicted_label");
  for (auto [col, name] : {std::pair{id_col, "pair_id"}, std::pair{score_col, "score"},
                           std::pair{pred_col, "predicted_label"}}) {
    if (!col)
      throw Error(ErrorCategory::schema, std::string("missing required column '") + name + "'",
                  name);
  }
  const auto truth_col = column("true_label");
  const auto prob_col = column("true_match_prob");

  std::vector<PairRecord> pairs;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto cells = split_csv_line(line, options.delimiter);
    if (cells.size() < header.size())
      throw Error(ErrorCategory::validation,
                  "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " cells, expected " + std::to_string(header.size()),
                  std::nullopt, row);
    PairRecord r;
    r.pair_id = cells[*id_col];
    r.score = parse_real(cells[*score_col], "score", row);
    r.predicted_label = parse_binary(cells[*pred_col], "predicted_label", row);
    if (truth_col && !cells[*truth_col].empty())
      r.true_label = parse_binary(cells[*truth_col], "true_label", row);
    if (prob_col && !cells[*prob_col].empty())
      r.true_match_prob = parse_real(cells[*prob_col], "true_match_prob", row);
    validate_record(r, row);
    pairs.push_back(std::move(r));
  }
  if (pairs.empty()) throw Error(ErrorCategory::empty_pool, "pool file has no data rows");

  bool probabilities = false;
  switch (options.score_kind) {
    case ScoreKind::probability: probabilities = true; break;
    case ScoreKind::raw: probabilities = false; break;
    case ScoreKind::automatic:
      probabilities = true;
      for (const auto& p : pairs)
        if (p.score < 0.0 || p.score > 1.0) probabilities = false;
      break;
  }
  return Pool(std::move(pairs), probabilities);
}

Pool load_pool(const std::string& path, const FormatOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::io, "cannot open pool file '" + path + "'");
  return read_pool(in, options);
}

void write_pool(std::ostream& out, const Pool& pool, char d) {
  out << "pair_id" << d << "score" << d << "predicted_label" << d << "true_label" << d
      << "true_match_prob\n";
  for (const auto& r : pool.pairs()) {
    out << quote_if_needed(r.pair_id, d) << d << shortest_repr(r.score) << d << r.predicted_label
        << d;
    if (r.true_label) out << *r.true_label;
    out << d;
    if (r.true_match_prob) out << shortest_repr(*r.true_match_prob);
    out << '\n';
  }
}

void save_pool(const std::string& path, const Pool& pool, char delimiter) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::io, "cannot write pool file '" + path + "'");
  write_pool(out, pool, delimiter);
}

ConfusionCounts confusion_counts(const Pool& pool) {
  ConfusionCounts c;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& r = pool[i];
    if (!r.true_label)
      throw Error(ErrorCategory::incomplete_ground_truth,
                  "pair '" + r.pair_id + "' has no true_label", "true_label", i + 1);
    const double mass = pool.uniform_marginal() ? 1.0 : pool.marginal()[i];
    const int l = *r.true_label;
    const int lh = r.predicted_label;
    c.tp += mass * (l * lh);
    c.fp += mass * ((1 - l) * lh);
    c.fn += mass * (l * (1 - lh));
  }
  return c;
}

double f_measure(const ConfusionCounts& c, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw Error(ErrorCategory::domain, "alpha must lie in [0,1]", "alpha");
  const double denom = alpha * (c.tp + c.fp) + (1.0 - alpha) * (c.tp + c.fn);
  if (!(denom > 0.0))
    throw Error(ErrorCategory::undefined_measure,
                "F-measure undefined: no true or predicted matches carry weight");
  return c.tp / denom;
}

double true_f_measure(const Pool& pool, double alpha) {
  return f_measure(confusion_counts(pool), alpha);
}

}  // namespace oasis
