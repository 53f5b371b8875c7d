#include "oasis/oracle.hpp"

#include "oasis/error.hpp"

namespace oasis {

LabelLedger::LabelLedger(OracleKind kind) : kind_(kind), rng_(kind.rng_seed) {}

int LabelLedger::query(const PairRecord& pair) {
  if (auto it = cache_.find(pair.pair_id); it != cache_.end()) return it->second;
  const int label = draw(pair);
  cache_.emplace(pair.pair_id, label);
  return label;
}

int LabelLedger::draw(const PairRecord& pair) {
  switch (kind_.variant) {
    case OracleVariant::deterministic:
      if (!pair.true_label)
        throw Error(ErrorCategory::oracle_capability,
                    "deterministic oracle needs true_label for pair '" + pair.pair_id + "'",
                    "true_label");
      return *pair.true_label;
    case OracleVariant::bernoulli_noisy:
      if (!pair.true_match_prob)
        throw Error(ErrorCategory::oracle_capability,
                    "noisy oracle needs true_match_prob for pair '" + pair.pair_id + "'",
                    "true_match_prob");
      return bernoulli(rng_, *pair.true_match_prob) ? 1 : 0;
    case OracleVariant::external: {
      if (!labeller_)
        throw Error(ErrorCategory::no_labeller, "external oracle has no labelling session attached");
      const int label = labeller_(pair);
      if (label != 0 && label != 1)
        throw Error(ErrorCategory::validation, "external label must be 0 or 1", "label");
      return label;
    }
  }
  throw Error(ErrorCategory::parameter, "unknown oracle variant");
}

}  // namespace oasis
