#include "ebm/numfmt.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "ebm/error.hpp"

namespace ebm {

std::string format_real(double value) {
  char buffer[40];
  const int written = std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return std::string(buffer, static_cast<std::size_t>(written));
}

bool try_parse_real(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  double parsed = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), parsed);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(parsed)) {
    return false;
  }
  out = parsed;
  return true;
}

double parse_real(std::string_view text) {
  double out = 0.0;
  if (!try_parse_real(text, out)) {
    throw ValidationError("not a finite number: '" + std::string(text) + "'");
  }
  return out;
}

}  // namespace ebm
