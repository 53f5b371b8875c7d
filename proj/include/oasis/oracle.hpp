#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>

#include "oasis/pool.hpp"
#include "oasis/random.hpp"

namespace oasis {

enum class OracleVariant { deterministic, bernoulli_noisy, external };

struct OracleKind {
  OracleVariant variant = OracleVariant::deterministic;
  std::uint64_t rng_seed = 0;  // bernoulli_noisy only
};

// Supplies labels for the external variant (a human via the service, or a
// scripted replay). Called at most once per distinct pair.
using ExternalLabeller = std::function<int(const PairRecord&)>;

// Caches the first label observed for each pair and counts distinct pairs
// sent to the underlying oracle (the label budget).
class LabelLedger {
 public:
  explicit LabelLedger(OracleKind kind);

  void attach_labeller(ExternalLabeller labeller) { labeller_ = std::move(labeller); }
  bool has_labeller() const noexcept { return static_cast<bool>(labeller_); }

  int query(const PairRecord& pair);

  bool is_cached(const std::string& pair_id) const { return cache_.count(pair_id) != 0; }
  std::size_t distinct_labels_used() const noexcept { return cache_.size(); }
  const OracleKind& kind() const noexcept { return kind_; }

 private:
  int draw(const PairRecord& pair);

  OracleKind kind_;
  Rng rng_;
  ExternalLabeller labeller_;
  std::unordered_map<std::string, int> cache_;
};

}  // namespace oasis
