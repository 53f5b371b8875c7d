#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace oasis {

enum class ErrorCategory {
  parameter,
  domain,
  schema,
  validation,
  io,
  empty_pool,
  incomplete_ground_truth,
  undefined_measure,
  inconsistent_flag,
  oracle_capability,
  no_labeller,
  degenerate_distribution,
  not_found,
  conflict,
  exhausted,
  unauthorized,
};

const char* to_string(ErrorCategory category);

// Process exit code for the CLI: 2 + the category's position above (parameter = 2).
int exit_code(ErrorCategory category);

// Single exception type for the library; callers branch on category().
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message,
        std::optional<std::string> field = std::nullopt,
        std::optional<std::size_t> row = std::nullopt)
      : std::runtime_error(message), category_(category), field_(std::move(field)), row_(row) {}

  ErrorCategory category() const noexcept { return category_; }
  const std::optional<std::string>& field() const noexcept { return field_; }
  // 1-based data row number (header excluded) for row-level validation errors.
  const std::optional<std::size_t>& row() const noexcept { return row_; }

 private:
  ErrorCategory category_;
  std::optional<std::string> field_;
  std::optional<std::size_t> row_;
};

}  // namespace oasis
