#include <algorithm>

#include "bytes.hpp"
#include "dmad/dataio.hpp"
#include "dmad/error.hpp"

namespace dmad {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'W', 'S', 'N', 'F'};

}  // namespace

std::vector<std::uint8_t> encode_features(const FeatureCache& cache) {
  detail::ByteWriter w;
  w.raw(kMagic.data(), kMagic.size());
  w.u32(kFeatureCacheVersion);
  w.raw(cache.config_hash.data(), cache.config_hash.size());
  w.u32(detail::ByteWriter::checked_u32(cache.records.size()));
  for (const PairFeatures& r : cache.records) {
    if (r.config_hash != cache.config_hash) {
      throw Error(ErrorKind::kConfigMismatch, "pair " + r.pair_id + " has a different config hash");
    }
    w.string(r.pair_id);
    for (const auto& channel : r.channels) {
      w.u32(detail::ByteWriter::checked_u32(channel.size()));
      w.f64s(channel);
    }
  }
  w.u32(crc32(w.bytes()));
  return std::move(w.bytes());
}

FeatureCache decode_features(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= kMagic.size() && !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw Error(ErrorKind::kVersionError, "not a feature cache (bad magic)");
  }
  if (bytes.size() >= 8) {
    detail::ByteReader header(bytes.subspan(4, 4), ErrorKind::kChecksumError);
    const std::uint32_t version = header.u32();
    if (version != kFeatureCacheVersion) {
      throw Error(ErrorKind::kVersionError,
                  "unsupported feature cache version " + std::to_string(version));
    }
  }
  constexpr std::size_t kMinimum = 4 + 4 + 32 + 4 + 4;
  if (bytes.size() < kMinimum) throw Error(ErrorKind::kChecksumError, "feature cache is truncated");

  const auto payload = bytes.first(bytes.size() - 4);
  detail::ByteReader trailer(bytes.last(4), ErrorKind::kChecksumError);
  if (trailer.u32() != crc32(payload)) {
    throw Error(ErrorKind::kChecksumError, "feature cache CRC mismatch (truncated or corrupted)");
  }

  detail::ByteReader r(payload.subspan(8), ErrorKind::kChecksumError);
  FeatureCache cache;
  r.raw(cache.config_hash.data(), cache.config_hash.size());
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    PairFeatures p;
    p.pair_id = r.string();
    p.config_hash = cache.config_hash;
    for (auto& channel : p.channels) channel = r.f64s(r.u32());
    cache.records.push_back(std::move(p));
  }
  if (r.remaining() != 0) throw Error(ErrorKind::kChecksumError, "trailing bytes in feature cache");
  return cache;
}

void write_features(const std::filesystem::path& path, const FeatureCache& cache) {
  write_file(path, encode_features(cache));
}

FeatureCache read_features(const std::filesystem::path& path) {
  try {
    return decode_features(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIoError) throw;
    throw Error(e.kind(), path.filename().string() + ": " + e.what());
  }
}

}  // namespace dmad
