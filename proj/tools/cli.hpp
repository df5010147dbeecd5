#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ebm::cli {

inline constexpr const char* kVersion = "0.1.0";

// Runs one command line (without the program name). Returns the process exit
// status: 0 success, 2 invalid input or usage, 1 internal failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// FNV-1a 64-bit hash of a file's bytes, as 16 hex digits.
std::string file_hash(const std::string& path);

}  // namespace ebm::cli
