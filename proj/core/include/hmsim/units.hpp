#pragma once

#include <cstdint>
#include <string>

namespace hmsim {

// "4096", "16K", "512M", "1G", "2T" (binary multiples). Throws ConfigError.
std::uint64_t parse_size(const std::string& text);
// Largest exact binary suffix, e.g. 16777216 -> "16M".
std::string format_size(std::uint64_t bytes);

}  // namespace hmsim
