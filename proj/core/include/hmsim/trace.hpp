#pragma once

// Trace formats, readers and synthetic generators.
//
// Text: one `R <hex>` or `W <hex>` per line; `#` starts a comment.
// Binary: 8-byte little-endian words, bit 63 = write, bits 62..0 = address.

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hmsim/request.hpp"
#include "hmsim/rng.hpp"

namespace hmsim {

inline constexpr std::uint64_t kWriteFlag = 1ull << 63;
inline constexpr std::uint64_t kMaxTraceAddress = kWriteFlag - 1;

// Parses one text line. Blank and comment-only lines yield nullopt.
// Throws TraceError carrying `line_number` and the offending column.
std::optional<Request> parse_text_record(std::string_view line, std::size_t line_number);
std::string format_text_record(const Request& request);

std::uint64_t encode_binary_record(const Request& request);
Request decode_binary_record(std::uint64_t word);

void write_text_trace(std::ostream& out, const std::vector<Request>& requests);
void write_binary_trace(std::ostream& out, const std::vector<Request>& requests);

class TraceSource {
 public:
  virtual ~TraceSource() = default;
  virtual std::optional<Request> next() = 0;
  // Restarts the stream from its first record.
  virtual void reset() = 0;
  // 1-based position of the record last returned (line number for text).
  virtual std::size_t position() const = 0;
};

class VectorTrace final : public TraceSource {
 public:
  explicit VectorTrace(std::vector<Request> requests) : requests_(std::move(requests)) {}
  std::optional<Request> next() override;
  void reset() override { index_ = 0; }
  std::size_t position() const override { return index_; }

 private:
  std::vector<Request> requests_;
  std::size_t index_ = 0;
};

class TextFileTrace final : public TraceSource {
 public:
  explicit TextFileTrace(std::string path);
  std::optional<Request> next() override;
  void reset() override;
  std::size_t position() const override { return line_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::string buffer_;
  std::size_t line_ = 0;
};

class BinaryFileTrace final : public TraceSource {
 public:
  explicit BinaryFileTrace(std::string path);
  std::optional<Request> next() override;
  void reset() override;
  std::size_t position() const override { return record_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t record_ = 0;
};

enum class SyntheticKind : std::uint8_t { kUniform, kZipf, kStride, kHotset };
const char* to_string(SyntheticKind kind);

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::kZipf;
  std::uint64_t length = 1'000'000;
  std::optional<std::uint64_t> seed;       // falls back to the run seed
  std::optional<std::uint64_t> footprint;  // bytes; falls back to slow capacity
  double write_fraction = 0.2;
  double alpha = 0.9;                   // zipf
  std::uint64_t stride = 256;           // stride, bytes
  double hot_fraction = 0.1;            // hotset: share of footprint that is hot
  double hot_probability = 0.9;         // hotset: share of accesses to the hot part
  std::uint64_t block_size = 256;       // population granularity for zipf/hotset
};

enum class TraceFormat : std::uint8_t { kText, kBinary };

struct TraceSpec {
  enum class Source : std::uint8_t { kFile, kSynthetic };
  Source source = Source::kSynthetic;
  std::string path;
  TraceFormat format = TraceFormat::kText;
  SyntheticSpec synthetic;
};

// Accepts `text:PATH`, `binary:PATH`, a bare path (`.bin` means binary), or
// `KIND[:key=value,...]` with KIND one of uniform, zipf, stride, hotset.
// Keys: length, seed, footprint, write_fraction, alpha, stride, hot_fraction,
// hot_probability. Sizes take K/M/G/T suffixes.
TraceSpec parse_trace_spec(const std::string& text);
std::string to_string(const TraceSpec& spec);

// Rank sampler for P(k) ~ 1/k^alpha over k in [1, n], by rejection-inversion.
class ZipfSampler {
 public:
  ZipfSampler(std::uint64_t n, double alpha);
  std::uint64_t operator()(Rng& rng) const;

 private:
  double h(double x) const;
  double h_integral(double x) const;
  double h_integral_inverse(double x) const;

  std::uint64_t n_;
  double alpha_;
  double h_integral_x1_;
  double h_integral_n_;
  double s_;
};

class SyntheticTrace final : public TraceSource {
 public:
  // `spec.seed` and `spec.footprint` must be set. Throws ConfigError.
  explicit SyntheticTrace(const SyntheticSpec& spec);
  std::optional<Request> next() override;
  void reset() override;
  std::size_t position() const override { return index_; }

 private:
  std::uint64_t next_address();

  SyntheticSpec spec_;
  Rng rng_;
  std::uint64_t blocks_ = 0;
  std::uint64_t index_ = 0;
  std::optional<ZipfSampler> zipf_;
};

// Opens a file or synthetic source. Synthetic defaults are filled from
// `default_seed` and `default_footprint`.
std::unique_ptr<TraceSource> open_trace(TraceSpec spec, std::uint64_t default_seed,
                                        std::uint64_t default_footprint,
                                        std::uint64_t block_size);

// Drains a source into memory.
std::vector<Request> collect(TraceSource& source);

}  // namespace hmsim
