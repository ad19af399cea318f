#include "hmsim/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include "hmsim/errors.hpp"
#include "hmsim/units.hpp"

namespace hmsim {

// --- records ---------------------------------------------------------------

std::optional<Request> parse_text_record(std::string_view line, std::size_t line_number) {
  const auto fail = [&](const std::string& what, std::size_t pos) -> TraceError {
    return TraceError("line " + std::to_string(line_number) + ", column " +
                          std::to_string(pos + 1) + ": " + what,
                      line_number, pos + 1);
  };
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };

  std::size_t pos = 0;
  while (pos < line.size() && is_space(line[pos])) ++pos;
  if (pos == line.size() || line[pos] == '#') return std::nullopt;

  Request request;
  if (line[pos] == 'R') {
    request.op = Op::kRead;
  } else if (line[pos] == 'W') {
    request.op = Op::kWrite;
  } else {
    throw fail("expected opcode R or W, got '" + std::string(1, line[pos]) + "'", pos);
  }
  ++pos;
  if (pos == line.size() || !is_space(line[pos])) throw fail("expected whitespace after opcode", pos);
  while (pos < line.size() && is_space(line[pos])) ++pos;
  if (line.substr(pos, 2) == "0x" || line.substr(pos, 2) == "0X") pos += 2;

  const std::size_t start = pos;
  std::uint64_t address = 0;
  const auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + line.size(), address, 16);
  if (ec == std::errc::result_out_of_range) throw fail("address does not fit in 64 bits", start);
  if (ec != std::errc{}) throw fail("expected a hex address", start);
  pos = static_cast<std::size_t>(ptr - line.data());
  if (address > kMaxTraceAddress) throw fail("address exceeds 63 bits", start);

  while (pos < line.size() && is_space(line[pos])) ++pos;
  if (pos < line.size() && line[pos] != '#') {
    throw fail("unexpected trailing text '" + std::string(line.substr(pos)) + "'", pos);
  }
  request.address = address;
  return request;
}

std::string format_text_record(const Request& request) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, request.address, 16);
  return std::string(request.is_write() ? "W " : "R ") + std::string(buf, end);
}

std::uint64_t encode_binary_record(const Request& request) {
  if (request.address > kMaxTraceAddress) {
    throw RangeError("trace address does not fit in 63 bits");
  }
  return request.address | (request.is_write() ? kWriteFlag : 0);
}

Request decode_binary_record(std::uint64_t word) {
  return {(word & kWriteFlag) ? Op::kWrite : Op::kRead, word & kMaxTraceAddress};
}

void write_text_trace(std::ostream& out, const std::vector<Request>& requests) {
  for (const Request& r : requests) out << format_text_record(r) << '\n';
}

void write_binary_trace(std::ostream& out, const std::vector<Request>& requests) {
  for (const Request& r : requests) {
    const std::uint64_t word = encode_binary_record(r);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(word >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), sizeof bytes);
  }
}

// --- sources ---------------------------------------------------------------

std::optional<Request> VectorTrace::next() {
  if (index_ == requests_.size()) return std::nullopt;
  return requests_[index_++];
}

TextFileTrace::TextFileTrace(std::string path) : path_(std::move(path)) { reset(); }

void TextFileTrace::reset() {
  in_ = std::ifstream(path_);
  if (!in_) throw ConfigError("cannot open trace file '" + path_ + "'");
  line_ = 0;
}

std::optional<Request> TextFileTrace::next() {
  while (std::getline(in_, buffer_)) {
    ++line_;
    if (auto request = parse_text_record(buffer_, line_)) return request;
  }
  return std::nullopt;
}

BinaryFileTrace::BinaryFileTrace(std::string path) : path_(std::move(path)) { reset(); }

void BinaryFileTrace::reset() {
  in_ = std::ifstream(path_, std::ios::binary);
  if (!in_) throw ConfigError("cannot open trace file '" + path_ + "'");
  record_ = 0;
}

std::optional<Request> BinaryFileTrace::next() {
  unsigned char bytes[8];
  in_.read(reinterpret_cast<char*>(bytes), sizeof bytes);
  const std::streamsize got = in_.gcount();
  if (got == 0) return std::nullopt;
  ++record_;
  if (got != sizeof bytes) {
    throw TraceError("record " + std::to_string(record_) + ": truncated binary record (" +
                         std::to_string(got) + " of 8 bytes)",
                     record_);
  }
  std::uint64_t word = 0;
  for (int i = 0; i < 8; ++i) word |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return decode_binary_record(word);
}

std::vector<Request> collect(TraceSource& source) {
  std::vector<Request> out;
  while (auto r = source.next()) out.push_back(*r);
  return out;
}

// --- zipf ------------------------------------------------------------------

namespace {

// log1p(x)/x and expm1(x)/x, continuous at 0.
double helper1(double x) {
  return std::abs(x) > 1e-8 ? std::log1p(x) / x : 1.0 - x * (0.5 - x * (1.0 / 3.0 - 0.25 * x));
}
double helper2(double x) {
  return std::abs(x) > 1e-8 ? std::expm1(x) / x
                            : 1.0 + x * 0.5 * (1.0 + x * (1.0 / 3.0) * (1.0 + 0.25 * x));
}

}  // namespace

ZipfSampler::ZipfSampler(std::uint64_t n, double alpha) : n_(n), alpha_(alpha) {
  if (n == 0) throw ConfigError("zipf population must be non-empty");
  if (!(alpha > 0.0)) throw ConfigError("zipf alpha must be > 0");
  h_integral_x1_ = h_integral(1.5) - 1.0;
  h_integral_n_ = h_integral(static_cast<double>(n) + 0.5);
  s_ = 2.0 - h_integral_inverse(h_integral(2.5) - h(2.0));
}

double ZipfSampler::h(double x) const { return std::exp(-alpha_ * std::log(x)); }

double ZipfSampler::h_integral(double x) const {
  const double log_x = std::log(x);
  return helper2((1.0 - alpha_) * log_x) * log_x;
}

double ZipfSampler::h_integral_inverse(double x) const {
  double t = x * (1.0 - alpha_);
  if (t < -1.0) t = -1.0;
  return std::exp(helper1(t) * x);
}

std::uint64_t ZipfSampler::operator()(Rng& rng) const {
  for (;;) {
    const double u = h_integral_n_ + uniform_unit(rng) * (h_integral_x1_ - h_integral_n_);
    const double x = h_integral_inverse(u);
    double k = std::floor(x + 0.5);
    if (k < 1.0) k = 1.0;
    if (k > static_cast<double>(n_)) k = static_cast<double>(n_);
    if (k - x <= s_ || u >= h_integral(k + 0.5) - h(k)) return static_cast<std::uint64_t>(k);
  }
}

// --- synthetic -------------------------------------------------------------

const char* to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::kUniform: return "uniform";
    case SyntheticKind::kZipf: return "zipf";
    case SyntheticKind::kStride: return "stride";
    case SyntheticKind::kHotset: return "hotset";
  }
  return "?";
}

SyntheticTrace::SyntheticTrace(const SyntheticSpec& spec) : spec_(spec) {
  if (!spec_.seed || !spec_.footprint) throw ConfigError("synthetic trace needs seed and footprint");
  if (*spec_.footprint == 0) throw ConfigError("synthetic footprint must be > 0");
  if (spec_.block_size < kDemandBytes || *spec_.footprint % spec_.block_size != 0) {
    throw ConfigError("synthetic footprint must be a multiple of the block size");
  }
  if (!(spec_.write_fraction >= 0.0 && spec_.write_fraction <= 1.0)) {
    throw ConfigError("write_fraction must be in [0, 1]");
  }
  blocks_ = *spec_.footprint / spec_.block_size;
  switch (spec_.kind) {
    case SyntheticKind::kZipf:
      zipf_.emplace(blocks_, spec_.alpha);
      break;
    case SyntheticKind::kStride:
      if (spec_.stride == 0) throw ConfigError("stride must be > 0");
      break;
    case SyntheticKind::kHotset:
      if (!(spec_.hot_fraction > 0.0 && spec_.hot_fraction <= 1.0) ||
          !(spec_.hot_probability >= 0.0 && spec_.hot_probability <= 1.0)) {
        throw ConfigError("hotset needs hot_fraction in (0, 1] and hot_probability in [0, 1]");
      }
      break;
    case SyntheticKind::kUniform:
      break;
  }
  reset();
}

void SyntheticTrace::reset() {
  rng_.seed(*spec_.seed);
  index_ = 0;
}

std::uint64_t SyntheticTrace::next_address() {
  const std::uint64_t lines = spec_.block_size / kDemandBytes;
  const auto in_block = [&](std::uint64_t block) {
    return block * spec_.block_size + uniform_below(rng_, lines) * kDemandBytes;
  };
  switch (spec_.kind) {
    case SyntheticKind::kUniform:
      return uniform_below(rng_, *spec_.footprint / kDemandBytes) * kDemandBytes;
    case SyntheticKind::kZipf:
      // Rank r lives at block r - 1, so hot data is contiguous.
      return in_block((*zipf_)(rng_) - 1);
    case SyntheticKind::kStride:
      return (index_ * spec_.stride) % *spec_.footprint;
    case SyntheticKind::kHotset: {
      const auto hot = std::max<std::uint64_t>(
          1, static_cast<std::uint64_t>(spec_.hot_fraction * static_cast<double>(blocks_)));
      if (hot == blocks_ || uniform_unit(rng_) < spec_.hot_probability) {
        return in_block(uniform_below(rng_, hot));
      }
      return in_block(hot + uniform_below(rng_, blocks_ - hot));
    }
  }
  return 0;
}

std::optional<Request> SyntheticTrace::next() {
  if (index_ == spec_.length) return std::nullopt;
  Request request;
  request.address = next_address();
  request.op = uniform_unit(rng_) < spec_.write_fraction ? Op::kWrite : Op::kRead;
  ++index_;
  return request;
}

// --- spec strings ----------------------------------------------------------

namespace {

double parse_real(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError("trace parameter " + key + ": '" + value + "' is not a number");
  }
  return out;
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError("trace parameter " + key + ": '" + value + "' is not an integer");
  }
  return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string format_real(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

TraceSpec parse_trace_spec(const std::string& text) {
  if (text.empty()) throw ConfigError("empty trace spec");
  TraceSpec spec;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);

  if (head == "text" || head == "binary") {
    if (rest.empty()) throw ConfigError("trace spec '" + text + "' is missing a path");
    spec.source = TraceSpec::Source::kFile;
    spec.format = head == "text" ? TraceFormat::kText : TraceFormat::kBinary;
    spec.path = rest;
    return spec;
  }

  SyntheticSpec& s = spec.synthetic;
  if (head == "uniform") {
    s.kind = SyntheticKind::kUniform;
  } else if (head == "zipf") {
    s.kind = SyntheticKind::kZipf;
  } else if (head == "stride") {
    s.kind = SyntheticKind::kStride;
  } else if (head == "hotset") {
    s.kind = SyntheticKind::kHotset;
  } else {
    spec.source = TraceSpec::Source::kFile;
    spec.path = text;
    spec.format = ends_with(text, ".bin") ? TraceFormat::kBinary : TraceFormat::kText;
    return spec;
  }

  std::size_t pos = 0;
  while (pos < rest.size()) {
    std::size_t comma = rest.find(',', pos);
    if (comma == std::string::npos) comma = rest.size();
    const std::string item = rest.substr(pos, comma - pos);
    pos = comma + 1;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("trace parameter '" + item + "' needs key=value");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (key == "length") {
      s.length = parse_count(key, value);
    } else if (key == "seed") {
      s.seed = parse_count(key, value);
    } else if (key == "footprint") {
      s.footprint = parse_size(value);
    } else if (key == "write_fraction") {
      s.write_fraction = parse_real(key, value);
    } else if (key == "alpha") {
      s.alpha = parse_real(key, value);
    } else if (key == "stride") {
      s.stride = parse_size(value);
    } else if (key == "hot_fraction") {
      s.hot_fraction = parse_real(key, value);
    } else if (key == "hot_probability") {
      s.hot_probability = parse_real(key, value);
    } else {
      throw ConfigError("unknown trace parameter '" + key + "'");
    }
  }
  if (s.kind == SyntheticKind::kZipf && !(s.alpha > 0.0)) throw ConfigError("zipf alpha must be > 0");
  if (s.footprint && *s.footprint == 0) throw ConfigError("synthetic footprint must be > 0");
  return spec;
}

std::string to_string(const TraceSpec& spec) {
  if (spec.source == TraceSpec::Source::kFile) {
    return std::string(spec.format == TraceFormat::kText ? "text:" : "binary:") + spec.path;
  }
  const SyntheticSpec& s = spec.synthetic;
  std::string out = std::string(to_string(s.kind)) + ":length=" + std::to_string(s.length);
  if (s.seed) out += ",seed=" + std::to_string(*s.seed);
  if (s.footprint) out += ",footprint=" + format_size(*s.footprint);
  out += ",write_fraction=" + format_real(s.write_fraction);
  switch (s.kind) {
    case SyntheticKind::kZipf: out += ",alpha=" + format_real(s.alpha); break;
    case SyntheticKind::kStride: out += ",stride=" + format_size(s.stride); break;
    case SyntheticKind::kHotset:
      out += ",hot_fraction=" + format_real(s.hot_fraction) +
             ",hot_probability=" + format_real(s.hot_probability);
      break;
    case SyntheticKind::kUniform: break;
  }
  return out;
}

std::unique_ptr<TraceSource> open_trace(TraceSpec spec, std::uint64_t default_seed,
                                        std::uint64_t default_footprint,
                                        std::uint64_t block_size) {
  if (spec.source == TraceSpec::Source::kFile) {
    if (spec.format == TraceFormat::kText) return std::make_unique<TextFileTrace>(spec.path);
    return std::make_unique<BinaryFileTrace>(spec.path);
  }
  SyntheticSpec& s = spec.synthetic;
  if (!s.seed) s.seed = default_seed;
  if (!s.footprint) s.footprint = default_footprint;
  s.block_size = block_size;
  return std::make_unique<SyntheticTrace>(s);
}

}  // namespace hmsim
