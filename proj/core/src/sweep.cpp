#include "hmsim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "hmsim/errors.hpp"
#include "hmsim/simulator.hpp"

namespace hmsim {

const std::vector<std::string>& sweep_keys() {
  static const std::vector<std::string> keys = {"capacity_ratio", "block_size", "irt_levels",
                                                "irc_partition"};
  return keys;
}

SweepSpec parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("sweep must look like KEY=V1,V2,...: " + text);
  SweepSpec spec;
  spec.key = text.substr(0, eq);
  const auto& keys = sweep_keys();
  if (std::find(keys.begin(), keys.end(), spec.key) == keys.end()) {
    throw ConfigError("cannot sweep '" + spec.key +
                      "' (expected capacity_ratio, block_size, irt_levels or irc_partition)");
  }
  std::string rest = text.substr(eq + 1);
  std::size_t start = 0;
  while (start <= rest.size()) {
    const auto comma = rest.find(',', start);
    const auto end = comma == std::string::npos ? rest.size() : comma;
    std::string value = rest.substr(start, end - start);
    if (value.empty()) throw ConfigError("empty value in sweep " + text);
    spec.values.push_back(std::move(value));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return spec;
}

std::vector<SweepResult> run_sweep(const Settings& base, const std::vector<std::string>& schemes,
                                   const SweepSpec& sweep, unsigned workers) {
  std::vector<SweepResult> results;
  for (const std::string& scheme : schemes) {
    for (const std::string& value : sweep.values) {
      Settings settings = base;
      if (sweep.key == "capacity_ratio") settings.erase("slow_capacity");
      settings.set(sweep.key, value);
      try {
        results.push_back({scheme, value, make_run_config(settings, scheme), {}});
      } catch (const ConfigError& e) {
        throw ConfigError("scheme " + scheme + ", " + sweep.key + "=" + value + ": " + e.what());
      }
    }
  }

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(results.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto work = [&] {
    for (std::size_t i = next++; i < results.size(); i = next++) {
      try {
        results[i].report = run_config(results[i].config);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = results.size();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

void write_sweep_csv(std::ostream& out, const SweepSpec& sweep,
                     const std::vector<SweepResult>& results) {
  write_csv_line(out, csv_header({"sweep_key", "sweep_value"}));
  for (const SweepResult& r : results) {
    write_csv_line(out, csv_row(r.report, {sweep.key, r.value}));
  }
}

}  // namespace hmsim
