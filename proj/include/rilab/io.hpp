#pragma once

// Text formats shared by the CLI and the reports.
//
// Map:       one piece per line, `src_level src_index tgt_level tgt_index` for
//            cell pieces or `iv src_lo src_hi tgt_lo tgt_hi` with rational
//            endpoints. Blank lines and `#` comments are ignored.
// Operator:  the map block followed by one multiplier line per piece, in the
//            order the pieces were listed.
// Step:      comma-separated values, 2^N of them.
// Atoms:     comma-separated `position:weight`, e.g. `1/4:0.5,3/4:0.5`.

#include <string>
#include <string_view>

#include "rilab/atomic_measures.hpp"
#include "rilab/operator_algebra.hpp"

namespace rilab {

std::string format_map(const MeasureMap& m);
MeasureMap parse_map(std::string_view text, int cap = kDefaultLevelCap);

std::string format_operator(const ElementaryOperator& t);
ElementaryOperator parse_operator(std::string_view text, int cap = kDefaultLevelCap);

std::string format_step(const StepFunction& f);
StepFunction parse_step(std::string_view text);

AtomicMeasure parse_atoms(std::string_view text);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

std::string read_file(const std::string& path);

}  // namespace rilab
