#pragma once

#include <cstdint>

namespace hmsim {

enum class Op : std::uint8_t { kRead, kWrite };

struct Request {
  Op op = Op::kRead;
  std::uint64_t address = 0;

  bool is_write() const { return op == Op::kWrite; }
  bool operator==(const Request&) const = default;
};

// Bytes moved per demand request.
inline constexpr std::uint64_t kDemandBytes = 64;

}  // namespace hmsim
