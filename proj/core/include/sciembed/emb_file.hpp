#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "sciembed/matrix.hpp"

namespace sciembed {

// In-memory image of an "EMB1" shard: fixed-stride entries of
// (pmid, dimension x binary16). Layout on disk, all little-endian:
//   "EMB1" | u32 version (=1) | u32 dimension | u64 count |
//   count x ( u64 pmid | dimension x u16 )
struct EmbShard {
  std::uint32_t dimension = 0;
  std::vector<std::uint64_t> pmids;
  std::vector<std::uint16_t> values;  // pmids.size() * dimension half-precision words

  std::size_t size() const noexcept { return pmids.size(); }
  std::span<const std::uint16_t> entry(std::size_t i) const noexcept {
    return {values.data() + i * dimension, dimension};
  }

  // Quantizes a float matrix; rejects non-finite values or values outside
  // the binary16 range.
  static EmbShard from_matrix(std::span<const std::uint64_t> pmids, const Matrix& vectors);
  Matrix to_matrix() const;

  friend bool operator==(const EmbShard&, const EmbShard&) = default;
};

inline constexpr std::uint32_t kEmbFormatVersion = 1;

std::uint64_t write_emb(std::ostream& out, const EmbShard& shard);
EmbShard read_emb(std::istream& in);

// Writes via a temporary file and rename so readers never observe a partial shard.
void write_emb_file(const std::filesystem::path& path, const EmbShard& shard);
EmbShard read_emb_file(const std::filesystem::path& path);

}  // namespace sciembed
