#include "oasis/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "oasis/error.hpp"

namespace oasis {
namespace {

constexpr const char* kHeader = "t,pair_id,stratum,w,label,prediction,f_estimate,budget";

template <typename T>
T parse_number(const std::string& cell, const char* field, std::size_t row) {
  T v{};
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size())
    throw Error(ErrorCategory::validation, std::string("cannot parse ") + field + " '" + cell + "'",
                field, row);
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_trace(std::ostream& out, const Pool& pool, const RunTrace& trace) {
  out << kHeader << '\n';
  for (const auto& r : trace.records) {
    const auto& id = pool[r.pair_index].pair_id;
    if (id.find_first_of(",\"\n") != std::string::npos)
      throw Error(ErrorCategory::validation, "pair_id '" + id + "' cannot be written to a trace",
                  "pair_id");
    out << r.t << ',' << id << ',';
    if (r.stratum >= 0) out << r.stratum;
    out << ',' << format_real(r.weight) << ',' << r.label << ',' << r.prediction << ',';
    if (r.f_estimate) out << format_real(*r.f_estimate);
    out << ',' << r.budget << '\n';
  }
}

void save_trace(const std::string& path, const Pool& pool, const RunTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::io, "cannot write trace file '" + path + "'");
  write_trace(out, pool, trace);
}

RunTrace read_trace(std::istream& in, const Pool& pool) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader)
    throw Error(ErrorCategory::schema, "trace header must be '" + std::string(kHeader) + "'");
  RunTrace trace;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    const auto c = split(line);
    if (c.size() != 8)
      throw Error(ErrorCategory::validation, "trace row must have 8 cells", std::nullopt, row);
    IterationRecord r;
    r.t = parse_number<std::size_t>(c[0], "t", row);
    const auto idx = pool.index_of(c[1]);
    if (!idx)
      throw Error(ErrorCategory::validation, "trace references unknown pair '" + c[1] + "'",
                  "pair_id", row);
    r.pair_index = *idx;
    r.stratum = c[2].empty() ? -1 : parse_number<int>(c[2], "stratum", row);
    r.weight = parse_number<double>(c[3], "w", row);
    r.label = parse_number<int>(c[4], "label", row);
    r.prediction = parse_number<int>(c[5], "prediction", row);
    if (!c[6].empty()) r.f_estimate = parse_number<double>(c[6], "f_estimate", row);
    r.budget = parse_number<std::size_t>(c[7], "budget", row);
    trace.records.push_back(r);
  }
  return trace;
}

RunTrace load_trace(const std::string& path, const Pool& pool) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::io, "cannot open trace file '" + path + "'");
  return read_trace(in, pool);
}

}  // namespace oasis
