#pragma once

#include <string>

namespace percarch {

/// Shortest decimal text that round-trips to the same double ("76.81", not
/// "76.810000000000002"). All CSV and record writers go through this so that
/// outputs are byte-stable.
std::string format_double(double value);

/// Fixed number of decimals, for human-facing tables.
std::string format_fixed(double value, int decimals);

}  // namespace percarch
