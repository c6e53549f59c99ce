#include "sciembed/emb_file.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "sciembed/binary_io.hpp"
#include "sciembed/error.hpp"
#include "sciembed/fs_util.hpp"
#include "sciembed/half.hpp"

namespace sciembed {

namespace {
constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
}

EmbShard EmbShard::from_matrix(std::span<const std::uint64_t> pmids, const Matrix& vectors) {
  if (pmids.size() != vectors.rows()) {
    throw DimensionError("pmid count vs vector rows", vectors.rows(), pmids.size());
  }
  EmbShard shard;
  shard.dimension = static_cast<std::uint32_t>(vectors.cols());
  shard.pmids.assign(pmids.begin(), pmids.end());
  shard.values.reserve(vectors.rows() * vectors.cols());
  for (std::size_t r = 0; r < vectors.rows(); ++r) {
    for (float v : vectors.row(r)) {
      const auto h = float_to_half(v);
      if (!std::isfinite(v) || !is_finite_half(h)) {
        throw ContractError("value " + std::to_string(v) + " for pmid " +
                            std::to_string(pmids[r]) + " is not representable in half precision");
      }
      shard.values.push_back(h);
    }
  }
  return shard;
}

Matrix EmbShard::to_matrix() const {
  return Matrix(size(), dimension, from_half(values));
}

std::uint64_t write_emb(std::ostream& out, const EmbShard& shard) {
  if (shard.values.size() != shard.pmids.size() * shard.dimension) {
    throw DimensionError("shard value count", shard.pmids.size() * shard.dimension,
                         shard.values.size());
  }
  std::string buf;
  buf.reserve(20 + shard.size() * (8 + 2 * std::size_t{shard.dimension}));
  buf.append(kMagic, 4);
  binary::put_le<std::uint32_t>(buf, kEmbFormatVersion);
  binary::put_le<std::uint32_t>(buf, shard.dimension);
  binary::put_le<std::uint64_t>(buf, shard.size());
  for (std::size_t i = 0; i < shard.size(); ++i) {
    binary::put_le<std::uint64_t>(buf, shard.pmids[i]);
    for (auto h : shard.entry(i)) binary::put_le<std::uint16_t>(buf, h);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing EMB1 shard");
  return buf.size();
}

EmbShard read_emb(std::istream& in) {
  binary::Reader reader(in);
  char magic[4];
  if (!reader.read(magic, 4) || std::string_view(magic, 4) != std::string_view(kMagic, 4)) {
    throw FormatError("bad EMB1 magic", 0);
  }
  const auto version = reader.get<std::uint32_t>("version");
  if (version != kEmbFormatVersion) {
    throw FormatError("unsupported EMB1 version " + std::to_string(version), 4);
  }
  EmbShard shard;
  shard.dimension = reader.get<std::uint32_t>("dimension");
  const auto count = reader.get<std::uint64_t>("entry count");
  std::vector<char> row(2 * std::size_t{shard.dimension});
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto pmid = reader.get<std::uint64_t>("entry pmid");
    const auto at = reader.offset();
    if (!reader.read(row.data(), row.size())) {
      throw FormatError("truncated EMB1 entry", at, pmid);
    }
    shard.pmids.push_back(pmid);
    for (std::size_t j = 0; j < shard.dimension; ++j) {
      const auto h = binary::get_le<std::uint16_t>(row.data() + 2 * j);
      if (!is_finite_half(h)) throw FormatError("non-finite EMB1 value", at + 2 * j, pmid);
      shard.values.push_back(h);
    }
  }
  return shard;
}

void write_emb_file(const std::filesystem::path& path, const EmbShard& shard) {
  std::ostringstream ss(std::ios::binary);
  write_emb(ss, shard);
  atomic_write_file(path, ss.str());
}

EmbShard read_emb_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_emb(in);
}

}  // namespace sciembed
