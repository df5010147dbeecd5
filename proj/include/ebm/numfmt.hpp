#pragma once

#include <string>
#include <string_view>

namespace ebm {

// 17 significant digits: enough to round-trip any finite double exactly.
std::string format_real(double value);

// Parses a full decimal string; throws ValidationError on trailing garbage
// or non-finite results.
double parse_real(std::string_view text);

// Like parse_real but returns false instead of throwing.
bool try_parse_real(std::string_view text, double& out);

}  // namespace ebm
