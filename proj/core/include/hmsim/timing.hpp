#pragma once

// Flat-latency timing model. Bandwidth is unbounded; only per-access
// latencies are charged.

#include <cstdint>

namespace hmsim {

struct TimingParams {
  double fast_read_ns = 50.0;
  double fast_write_ns = 50.0;
  double slow_read_ns = 100.0;
  double slow_write_ns = 100.0;
  double core_ghz = 3.2;
  std::uint32_t rc_hit_cycles = 3;

  double rc_ns() const { return static_cast<double>(rc_hit_cycles) / core_ghz; }

  // Throws ConfigError on non-positive latencies or a slow tier faster than
  // the fast one.
  void validate() const;

  static TimingParams ddr() { return {}; }
  static TimingParams nvm() {
    TimingParams t;
    t.slow_read_ns = 77.0;
    t.slow_write_ns = 231.0;
    return t;
  }
};

}  // namespace hmsim
