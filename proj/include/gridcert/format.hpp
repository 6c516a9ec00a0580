#pragma once

#include <string>

namespace gridcert {

/// Shortest decimal that parses back to the same double; "inf", "-inf", "nan" otherwise.
std::string format_double(double value);

/// Value rounded to `digits` significant figures for display.
double round_significant(double value, int digits = 3);

}  // namespace gridcert
