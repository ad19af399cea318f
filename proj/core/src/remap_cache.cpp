#include "hmsim/remap_cache.hpp"

#include <bit>
#include <charconv>

#include "hmsim/errors.hpp"

namespace hmsim {

const char* to_string(RemapCacheKind kind) {
  switch (kind) {
    case RemapCacheKind::kNone: return "none";
    case RemapCacheKind::kConventional: return "conventional";
    case RemapCacheKind::kIdentityAware: return "irc";
  }
  return "?";
}

RemapCacheKind remap_cache_kind_from_string(const std::string& text) {
  if (text == "none") return RemapCacheKind::kNone;
  if (text == "conventional") return RemapCacheKind::kConventional;
  if (text == "irc") return RemapCacheKind::kIdentityAware;
  throw ConfigError("unknown remap cache '" + text + "' (expected none|conventional|irc)");
}

IrcPartition irc_partition_from_string(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("irc_partition must look like ID:NONID, got '" + text + "'");
  }
  IrcPartition p;
  const auto parse = [&](std::string_view part, std::uint32_t& out) {
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    if (ec != std::errc{} || ptr != part.data() + part.size()) {
      throw ConfigError("bad irc_partition '" + text + "'");
    }
  };
  parse(std::string_view(text).substr(0, colon), p.id_share);
  parse(std::string_view(text).substr(colon + 1), p.non_id_share);
  if (p.id_share + p.non_id_share == 0 || p.non_id_share == 0) {
    throw ConfigError("irc_partition needs a non-zero NonId share");
  }
  return p;
}

std::string to_string(const IrcPartition& partition) {
  return std::to_string(partition.id_share) + ":" + std::to_string(partition.non_id_share);
}

RemapCacheConfig RemapCacheConfig::with_partition(IrcPartition partition) {
  RemapCacheConfig config;
  const std::uint64_t total = config.conventional.entries();
  const std::uint64_t shares = partition.id_share + partition.non_id_share;
  if ((total * partition.id_share) % shares != 0) {
    throw ConfigError("irc_partition " + to_string(partition) + " does not split the budget evenly");
  }
  const std::uint64_t id_entries = total * partition.id_share / shares;
  const std::uint64_t non_id_entries = total - id_entries;
  const std::uint32_t id_ways = config.id.ways;
  if (non_id_entries % config.conventional.sets != 0 || id_entries % id_ways != 0) {
    throw ConfigError("irc_partition " + to_string(partition) + " yields fractional ways/sets");
  }
  const std::uint64_t id_sets = id_entries / id_ways;
  if (id_sets != 0 && !std::has_single_bit(id_sets)) {
    throw ConfigError("irc_partition " + to_string(partition) +
                      " yields a non-power-of-two IdCache set count");
  }
  config.non_id = {config.conventional.sets,
                   static_cast<std::uint32_t>(non_id_entries / config.conventional.sets)};
  config.id = {static_cast<std::uint32_t>(id_sets), id_ways};
  return config;
}

std::uint32_t id_index(std::uint64_t superblock, unsigned index_bits) {
  if (index_bits == 0) return 0;
  const std::uint64_t mask = (std::uint64_t{1} << index_bits) - 1;
  return static_cast<std::uint32_t>((superblock ^ (superblock >> index_bits)) & mask);
}

namespace {

// Picks an invalid way first, otherwise the FIFO head.
template <typename LineT>
std::uint32_t choose_way(const LineT* set_lines, std::uint32_t ways, std::uint32_t& fifo) {
  for (std::uint32_t way = 0; way < ways; ++way) {
    if (!set_lines[way].valid) return way;
  }
  const std::uint32_t way = fifo;
  fifo = (fifo + 1) % ways;
  return way;
}

void check_shape(const CacheShape& shape, const char* name) {
  if (shape.sets != 0 && (!std::has_single_bit(shape.sets) || shape.ways == 0)) {
    throw ConfigError(std::string(name) + " needs a power-of-two set count and >= 1 way");
  }
}

}  // namespace

// --- ConventionalRemapCache ------------------------------------------------

ConventionalRemapCache::ConventionalRemapCache(const RemapCacheConfig& config,
                                               std::uint32_t num_sets)
    : RemapCache(config.hit_latency_cycles),
      shape_(config.conventional),
      set_shift_(static_cast<unsigned>(std::countr_zero(num_sets))) {
  check_shape(shape_, "conventional remap cache");
  if (shape_.sets == 0) throw ConfigError("conventional remap cache needs at least one set");
  lines_.resize(shape_.entries());
  fifo_.assign(shape_.sets, 0);
}

ConventionalRemapCache::Line* ConventionalRemapCache::find(std::uint64_t block) {
  Line* set_lines = &lines_[(block & (shape_.sets - 1)) * shape_.ways];
  for (std::uint32_t way = 0; way < shape_.ways; ++way) {
    if (set_lines[way].valid && set_lines[way].block == block) return &set_lines[way];
  }
  return nullptr;
}

RcLookupResult ConventionalRemapCache::lookup(std::uint32_t set_id, std::uint32_t key) {
  ++stats_.lookups;
  RcLookupResult result;
  const std::uint64_t block = (static_cast<std::uint64_t>(key) << set_shift_) | set_id;
  if (const Line* line = find(block)) {
    result.which = RcLookupResult::Which::kConventional;
    if (line->mapping.is_identity()) {
      result.outcome = RcLookupResult::Outcome::kIdentityHit;
      result.device_block = key;
      ++stats_.id_hits;
    } else {
      result.outcome = RcLookupResult::Outcome::kRemapHit;
      result.device_block = line->mapping.device_block;
      ++stats_.non_id_hits;
    }
    return result;
  }
  ++stats_.misses;
  return result;
}

void ConventionalRemapCache::fill(std::uint32_t set_id, std::uint32_t key,
                                  const RemapLookupResult& resolution,
                                  const std::optional<LeafView>&) {
  ++stats_.fills;
  const std::uint64_t block = (static_cast<std::uint64_t>(key) << set_shift_) | set_id;
  Line* line = find(block);
  if (line == nullptr) {
    const std::uint64_t index = block & (shape_.sets - 1);
    Line* set_lines = &lines_[index * shape_.ways];
    line = &set_lines[choose_way(set_lines, shape_.ways, fifo_[index])];
  }
  *line = Line{true, block, resolution.mapping};
}

void ConventionalRemapCache::update(std::uint32_t set_id, std::uint32_t key) {
  const std::uint64_t block = (static_cast<std::uint64_t>(key) << set_shift_) | set_id;
  if (Line* line = find(block)) {
    line->valid = false;
    ++stats_.invalidations;
  }
}

void ConventionalRemapCache::for_each_assertion(
    const std::function<void(std::uint32_t, std::uint32_t, Mapping)>& fn) const {
  const std::uint64_t set_mask = (std::uint64_t{1} << set_shift_) - 1;
  for (const Line& line : lines_) {
    if (!line.valid) continue;
    fn(static_cast<std::uint32_t>(line.block & set_mask),
       static_cast<std::uint32_t>(line.block >> set_shift_), line.mapping);
  }
}

// --- IdentityAwareRemapCache -----------------------------------------------

IdentityAwareRemapCache::IdentityAwareRemapCache(const RemapCacheConfig& config,
                                                 std::uint32_t num_sets,
                                                 std::uint32_t physical_keys)
    : RemapCache(config.hit_latency_cycles),
      config_(config),
      num_sets_(num_sets),
      set_shift_(static_cast<unsigned>(std::countr_zero(num_sets))),
      physical_keys_(physical_keys),
      id_index_bits_(config.id.sets == 0 ? 0
                                         : static_cast<unsigned>(std::countr_zero(config.id.sets))) {
  check_shape(config_.non_id, "NonIdCache");
  check_shape(config_.id, "IdCache");
  if (config_.non_id.sets == 0) throw ConfigError("NonIdCache needs at least one set");
  non_id_.resize(config_.non_id.entries());
  non_id_fifo_.assign(config_.non_id.sets, 0);
  id_.resize(config_.id.entries());
  id_fifo_.assign(config_.id.sets, 0);
}

std::uint64_t IdentityAwareRemapCache::superblock_of(std::uint32_t set_id,
                                                     std::uint32_t key) const {
  // Super-blocks are 32 consecutive set-local blocks, so one leaf fetch
  // covers whole super-blocks.
  return (static_cast<std::uint64_t>(key / RemapCacheConfig::kBitsPerIdLine) << set_shift_) |
         set_id;
}

IdentityAwareRemapCache::NonIdLine* IdentityAwareRemapCache::find_non_id(std::uint64_t block) {
  NonIdLine* set_lines = &non_id_[(block & (config_.non_id.sets - 1)) * config_.non_id.ways];
  for (std::uint32_t way = 0; way < config_.non_id.ways; ++way) {
    if (set_lines[way].valid && set_lines[way].block == block) return &set_lines[way];
  }
  return nullptr;
}

const IdentityAwareRemapCache::IdLine* IdentityAwareRemapCache::find_id(
    std::uint64_t superblock) const {
  if (config_.id.sets == 0) return nullptr;
  const IdLine* set_lines =
      &id_[static_cast<std::size_t>(id_index(superblock, id_index_bits_)) * config_.id.ways];
  for (std::uint32_t way = 0; way < config_.id.ways; ++way) {
    if (set_lines[way].valid && set_lines[way].superblock == superblock) return &set_lines[way];
  }
  return nullptr;
}

IdentityAwareRemapCache::IdLine* IdentityAwareRemapCache::find_id(std::uint64_t superblock) {
  return const_cast<IdLine*>(std::as_const(*this).find_id(superblock));
}

IdentityAwareRemapCache::IdLine& IdentityAwareRemapCache::allocate_id(std::uint64_t superblock) {
  if (IdLine* line = find_id(superblock)) return *line;
  const std::uint32_t index = id_index(superblock, id_index_bits_);
  IdLine* set_lines = &id_[static_cast<std::size_t>(index) * config_.id.ways];
  IdLine& line = set_lines[choose_way(set_lines, config_.id.ways, id_fifo_[index])];
  line = IdLine{true, superblock, 0};
  return line;
}

RcLookupResult IdentityAwareRemapCache::lookup(std::uint32_t set_id, std::uint32_t key) {
  ++stats_.lookups;
  RcLookupResult result;
  if (const IdLine* line = find_id(superblock_of(set_id, key))) {
    if (line->bits >> (key % RemapCacheConfig::kBitsPerIdLine) & 1u) {
      result.outcome = RcLookupResult::Outcome::kIdentityHit;
      result.which = RcLookupResult::Which::kId;
      result.device_block = key;
      ++stats_.id_hits;
      return result;
    }
  }
  const std::uint64_t block = (static_cast<std::uint64_t>(key) << set_shift_) | set_id;
  if (const NonIdLine* line = find_non_id(block)) {
    result.outcome = RcLookupResult::Outcome::kRemapHit;
    result.which = RcLookupResult::Which::kNonId;
    result.device_block = line->device_block;
    ++stats_.non_id_hits;
    return result;
  }
  ++stats_.misses;
  return result;
}

void IdentityAwareRemapCache::fill(std::uint32_t set_id, std::uint32_t key,
                                   const RemapLookupResult& resolution,
                                   const std::optional<LeafView>& leaf) {
  ++stats_.fills;
  const std::uint64_t superblock = superblock_of(set_id, key);
  const std::uint32_t bit = key % RemapCacheConfig::kBitsPerIdLine;

  if (!resolution.mapping.is_identity()) {
    if (IdLine* line = find_id(superblock)) line->bits &= ~(1u << bit);
    const std::uint64_t block = (static_cast<std::uint64_t>(key) << set_shift_) | set_id;
    NonIdLine* target = find_non_id(block);
    if (target == nullptr) {
      const std::uint64_t index = block & (config_.non_id.sets - 1);
      NonIdLine* set_lines = &non_id_[index * config_.non_id.ways];
      target = &set_lines[choose_way(set_lines, config_.non_id.ways, non_id_fifo_[index])];
    }
    *target = NonIdLine{true, block, resolution.mapping.device_block};
    return;
  }

  if (config_.id.sets == 0) return;
  IdLine& line = allocate_id(superblock);
  line.bits |= 1u << bit;
  if (!config_.batch_fill || !leaf) return;

  // Every key of this super-block that the fetched leaf shows as identity.
  const std::uint32_t first = key - bit;
  const std::uint32_t leaf_first = leaf->first_key;
  const std::uint32_t leaf_keys = leaf->keys;
  for (std::uint32_t i = 0; i < RemapCacheConfig::kBitsPerIdLine; ++i) {
    const std::uint32_t k = first + i;
    if (k >= physical_keys_ || k < leaf_first || k - leaf_first >= leaf_keys) continue;
    if (!leaf->allocated || leaf->entries[k - leaf_first] == kInvalidEntry) line.bits |= 1u << i;
  }
}

void IdentityAwareRemapCache::update(std::uint32_t set_id, std::uint32_t key) {
  bool touched = false;
  const std::uint64_t block = (static_cast<std::uint64_t>(key) << set_shift_) | set_id;
  if (NonIdLine* line = find_non_id(block)) {
    line->valid = false;
    touched = true;
  }
  if (IdLine* line = find_id(superblock_of(set_id, key))) {
    const std::uint32_t mask = 1u << (key % RemapCacheConfig::kBitsPerIdLine);
    if (line->bits & mask) {
      line->bits &= ~mask;
      touched = true;
    }
  }
  if (touched) ++stats_.invalidations;
}

std::optional<std::uint32_t> IdentityAwareRemapCache::id_line_bits(std::uint32_t set_id,
                                                                   std::uint32_t key) const {
  if (const IdLine* line = find_id(superblock_of(set_id, key))) return line->bits;
  return std::nullopt;
}

void IdentityAwareRemapCache::for_each_assertion(
    const std::function<void(std::uint32_t, std::uint32_t, Mapping)>& fn) const {
  const std::uint64_t set_mask = (std::uint64_t{1} << set_shift_) - 1;
  for (const NonIdLine& line : non_id_) {
    if (!line.valid) continue;
    fn(static_cast<std::uint32_t>(line.block & set_mask),
       static_cast<std::uint32_t>(line.block >> set_shift_), Mapping::remapped(line.device_block));
  }
  for (const IdLine& line : id_) {
    if (!line.valid) continue;
    const auto set_id = static_cast<std::uint32_t>(line.superblock & set_mask);
    const auto first =
        static_cast<std::uint32_t>((line.superblock >> set_shift_) * RemapCacheConfig::kBitsPerIdLine);
    for (std::uint32_t i = 0; i < RemapCacheConfig::kBitsPerIdLine; ++i) {
      if (line.bits >> i & 1u) fn(set_id, first + i, Mapping::identity());
    }
  }
}

std::unique_ptr<RemapCache> make_remap_cache(RemapCacheKind kind, const RemapCacheConfig& config,
                                             std::uint32_t num_sets, std::uint32_t physical_keys) {
  switch (kind) {
    case RemapCacheKind::kNone: return nullptr;
    case RemapCacheKind::kConventional:
      return std::make_unique<ConventionalRemapCache>(config, num_sets);
    case RemapCacheKind::kIdentityAware:
      return std::make_unique<IdentityAwareRemapCache>(config, num_sets, physical_keys);
  }
  return nullptr;
}

}  // namespace hmsim
