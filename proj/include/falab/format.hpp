#pragma once

#include <string>
#include <string_view>

namespace falab {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Strict parse of a whole field; returns false on any trailing garbage.
bool parse_double(std::string_view s, double& out);

} // namespace falab
