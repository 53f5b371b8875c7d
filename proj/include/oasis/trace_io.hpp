#pragma once

#include <iosfwd>
#include <string>

#include "oasis/pool.hpp"
#include "oasis/samplers.hpp"

namespace oasis {

// One row per iteration:
//   t,pair_id,stratum,w,label,prediction,f_estimate,budget
// stratum and f_estimate are blank when absent. Reals use the shortest
// round-trip representation, so a trace re-reads bit-identically.
void write_trace(std::ostream& out, const Pool& pool, const RunTrace& trace);
void save_trace(const std::string& path, const Pool& pool, const RunTrace& trace);

// Restores the per-iteration records; pair ids are resolved against `pool`.
RunTrace read_trace(std::istream& in, const Pool& pool);
RunTrace load_trace(const std::string& path, const Pool& pool);

std::string format_real(double v);

}  // namespace oasis
