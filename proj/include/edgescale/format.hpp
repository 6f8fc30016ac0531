#pragma once

#include <string>

namespace edgescale {

/// Shortest decimal text that round-trips to the same double ("3.1", "4",
/// "0.30000000000000004"). NaN and infinities use the Prometheus spellings.
std::string format_number(double value);

}  // namespace edgescale
