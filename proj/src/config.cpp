#include "oasis/config.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "oasis/error.hpp"
#include "oasis/trace_io.hpp"

namespace oasis {
namespace {

constexpr std::array<std::string_view, 13> kKeys = {
    "strategy", "alpha",  "epsilon", "eta",          "iterations", "desired_K",
    "strata",   "histogram_bins", "tau", "prior_decay", "seed", "max_budget",
    "record_instrumental"};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out))
    throw Error(ErrorCategory::domain, "expected a real number for " + std::string(key) + ", got '" +
                                           std::string(v) + "'",
                std::string(key));
  return out;
}

std::uint64_t parse_count(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw Error(ErrorCategory::domain, "expected a non-negative integer for " + std::string(key) +
                                           ", got '" + std::string(v) + "'",
                std::string(key));
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCategory::domain, "expected true/false for " + std::string(key), std::string(key));
}

}  // namespace

bool is_config_field(std::string_view key) {
  for (auto k : kKeys)
    if (k == key) return true;
  return false;
}

void set_config_field(SamplerConfig& c, std::string_view key, std::string_view raw) {
  const auto v = trim(raw);
  // "none" clears the optional fields.
  const bool none = v == "none" || v.empty();
  if (key == "strategy") {
    try {
      c.strategy = parse_strategy(std::string(v));
    } catch (const Error& e) {
      throw Error(e.category(), e.what(), "strategy");
    }
  } else if (key == "alpha") {
    c.alpha = parse_real(key, v);
  } else if (key == "epsilon") {
    c.epsilon = parse_real(key, v);
  } else if (key == "eta") {
    c.eta = none ? std::nullopt : std::optional<double>(parse_real(key, v));
  } else if (key == "iterations") {
    c.iterations = parse_count(key, v);
  } else if (key == "desired_K" || key == "strata") {
    c.desired_K = parse_count(key, v);
  } else if (key == "histogram_bins") {
    c.histogram_bins = parse_count(key, v);
  } else if (key == "tau") {
    c.tau = none ? std::nullopt : std::optional<double>(parse_real(key, v));
  } else if (key == "prior_decay") {
    c.prior_decay = parse_bool(key, v);
  } else if (key == "seed") {
    c.seed = parse_count(key, v);
  } else if (key == "max_budget") {
    c.max_budget = none ? std::nullopt : std::optional<std::size_t>(parse_count(key, v));
  } else if (key == "record_instrumental") {
    c.record_instrumental = parse_bool(key, v);
  } else {
    throw Error(ErrorCategory::parameter, "unknown config key '" + std::string(key) + "'",
                std::string(key));
  }
}

std::vector<std::pair<std::string, std::string>> config_entries(const SamplerConfig& c) {
  std::vector<std::pair<std::string, std::string>> out = {
      {"strategy", to_string(c.strategy)},
      {"alpha", format_real(c.alpha)},
      {"epsilon", format_real(c.epsilon)},
      {"iterations", std::to_string(c.iterations)},
      {"desired_K", std::to_string(c.desired_K)},
      {"histogram_bins", std::to_string(c.histogram_bins)},
      {"prior_decay", c.prior_decay ? "true" : "false"},
      {"seed", std::to_string(c.seed)},
  };
  if (c.eta) out.emplace_back("eta", format_real(*c.eta));
  if (c.tau) out.emplace_back("tau", format_real(*c.tau));
  if (c.max_budget) out.emplace_back("max_budget", std::to_string(*c.max_budget));
  if (c.record_instrumental) out.emplace_back("record_instrumental", "true");
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCategory::schema, "expected key = value", std::nullopt, line_no);
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorCategory::schema, "empty key", std::nullopt, line_no);
    out.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

}  // namespace oasis
