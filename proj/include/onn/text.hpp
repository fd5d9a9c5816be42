#pragma once

#include <string>
#include <string_view>

namespace onn {

/// Shortest decimal form that parses back to the identical double ("inf" for +inf).
std::string format_double(double x);

/// Strict full-token parse; throws Error(kFormat) on anything else.
double parse_double(std::string_view s);

}  // namespace onn
