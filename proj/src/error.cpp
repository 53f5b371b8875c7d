#include "oasis/error.hpp"

namespace oasis {

const char* to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::parameter: return "parameter";
    case ErrorCategory::domain: return "domain";
    case ErrorCategory::schema: return "schema";
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::io: return "io";
    case ErrorCategory::empty_pool: return "empty_pool";
    case ErrorCategory::incomplete_ground_truth: return "incomplete_ground_truth";
    case ErrorCategory::undefined_measure: return "undefined_measure";
    case ErrorCategory::inconsistent_flag: return "inconsistent_flag";
    case ErrorCategory::oracle_capability: return "oracle_capability";
    case ErrorCategory::no_labeller: return "no_labeller";
    case ErrorCategory::degenerate_distribution: return "degenerate_distribution";
    case ErrorCategory::not_found: return "not_found";
    case ErrorCategory::conflict: return "conflict";
    case ErrorCategory::exhausted: return "exhausted";
    case ErrorCategory::unauthorized: return "unauthorized";
  }
  return "unknown";
}

int exit_code(ErrorCategory category) { return 2 + static_cast<int>(category); }

}  // namespace oasis
