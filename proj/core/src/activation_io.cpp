#include "sciembed/activation_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "sciembed/binary_io.hpp"
#include "sciembed/error.hpp"

namespace sciembed {

namespace {

constexpr char kMagic[4] = {'T', 'A', 'C', 'S'};

bool trim_is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

std::string encode_block(const ActivationMatrix& m) {
  std::string b;
  const auto t = static_cast<std::uint32_t>(m.token_count());
  const auto d = static_cast<std::uint32_t>(m.width());
  binary::put_le<std::uint32_t>(b, d);
  binary::put_le<std::uint32_t>(b, t);
  binary::put_le<std::uint32_t>(b, m.losses ? kFlagLosses : 0u);
  for (const auto& tok : m.tokens) {
    if (tok.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ContractError("token longer than 65535 bytes in pmid " + std::to_string(m.pmid));
    }
    binary::put_le<std::uint16_t>(b, static_cast<std::uint16_t>(tok.size()));
    b += tok;
  }
  for (auto f : m.special_mask) b += static_cast<char>(f ? 1 : 0);
  for (float v : m.rows.data()) binary::put_le<float>(b, v);
  if (m.losses) {
    for (float v : *m.losses) binary::put_le<float>(b, v);
  }
  return b;
}

// Bounds-checked cursor over one document block.
class BlockCursor {
 public:
  BlockCursor(const std::string& block, std::uint64_t base, std::uint64_t pmid)
      : b_(block), base_(base), pmid_(pmid) {}

  const char* take(std::size_t n, const char* what) {
    if (pos_ + n > b_.size()) {
      throw FormatError(std::string("block too short for ") + what, base_ + pos_, pmid_);
    }
    const char* p = b_.data() + pos_;
    pos_ += n;
    return p;
  }
  template <typename T>
  T get(const char* what) {
    return binary::get_le<T>(take(sizeof(T), what));
  }
  std::uint64_t offset() const { return base_ + pos_; }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  const std::string& b_;
  std::uint64_t base_;
  std::size_t pos_ = 0;
  std::uint64_t pmid_;
};

ActivationMatrix decode_block(const std::string& block, std::uint64_t base, std::uint64_t pmid) {
  BlockCursor cur(block, base, pmid);
  const auto d = cur.get<std::uint32_t>("dimension");
  const auto t = cur.get<std::uint32_t>("token count");
  const auto flags = cur.get<std::uint32_t>("flags");
  if ((flags & ~kFlagLosses) != 0) {
    throw FormatError("unknown flag bits " + std::to_string(flags), base + 8, pmid);
  }
  ActivationMatrix m;
  m.pmid = pmid;
  m.tokens.reserve(t);
  for (std::uint32_t i = 0; i < t; ++i) {
    const auto len = cur.get<std::uint16_t>("token length");
    const char* p = cur.take(len, "token bytes");
    m.tokens.emplace_back(p, len);
  }
  const char* mask = cur.take(t, "special mask");
  m.special_mask.resize(t);
  for (std::uint32_t i = 0; i < t; ++i) {
    const auto f = static_cast<std::uint8_t>(mask[i]);
    if (f > 1) throw FormatError("special mask byte is not 0/1", cur.offset() - t + i, pmid);
    m.special_mask[i] = f;
  }
  const std::size_t n = std::size_t{t} * d;
  if (n * 4 > cur.remaining()) {
    throw FormatError("block too short for activations", cur.offset(), pmid);
  }
  std::vector<float> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto at = cur.offset();
    values[i] = cur.get<float>("activation");
    if (!std::isfinite(values[i])) throw FormatError("non-finite activation", at, pmid);
  }
  m.rows = Matrix(t, d, std::move(values));
  if (flags & kFlagLosses) {
    std::vector<float> losses(t);
    for (std::uint32_t i = 0; i < t; ++i) {
      const auto at = cur.offset();
      losses[i] = cur.get<float>("losses");
      if (!std::isfinite(losses[i]) || losses[i] < 0.0f) {
        throw FormatError("loss must be finite and non-negative", at, pmid);
      }
    }
    m.losses = std::move(losses);
  }
  if (cur.remaining() != 0) {
    throw FormatError(std::to_string(cur.remaining()) + " unexpected trailing bytes in block", cur.offset(),
                      pmid);
  }
  return m;
}

}  // namespace

void ActivationMatrix::validate() const {
  const auto t = tokens.size();
  if (special_mask.size() != t) throw DimensionError("special mask length", t, special_mask.size());
  if (rows.rows() != t) throw DimensionError("activation rows", t, rows.rows());
  for (float v : rows.data()) {
    if (!std::isfinite(v)) throw ContractError("non-finite activation in pmid " + std::to_string(pmid));
  }
  for (auto f : special_mask) {
    if (f > 1) throw ContractError("special mask value must be 0 or 1");
  }
  if (losses) {
    if (losses->size() != t) throw DimensionError("loss count", t, losses->size());
    for (float v : *losses) {
      if (!std::isfinite(v) || v < 0.0f) {
        throw ContractError("loss must be finite and non-negative in pmid " + std::to_string(pmid));
      }
    }
  }
}

std::uint64_t write_container(std::span<const ActivationMatrix> docs, std::ostream& sink) {
  std::string head;
  head.append(kMagic, 4);
  binary::put_le<std::uint32_t>(head, kContainerVersion);
  binary::put_le<std::uint64_t>(head, docs.size());
  sink.write(head.data(), static_cast<std::streamsize>(head.size()));
  std::uint64_t written = head.size();
  for (const auto& m : docs) {
    m.validate();
    const auto block = encode_block(m);
    if (block.size() > std::numeric_limits<std::uint32_t>::max()) {
      throw ContractError("document block exceeds 4 GiB for pmid " + std::to_string(m.pmid));
    }
    std::string frame;
    binary::put_le<std::uint64_t>(frame, m.pmid);
    binary::put_le<std::uint32_t>(frame, static_cast<std::uint32_t>(block.size()));
    sink.write(frame.data(), static_cast<std::streamsize>(frame.size()));
    sink.write(block.data(), static_cast<std::streamsize>(block.size()));
    written += frame.size() + block.size();
  }
  if (!sink) throw IoError("failed writing container");
  return written;
}

ContainerReader::ContainerReader(std::istream& source) : in_(source) {
  binary::Reader r(in_);
  char magic[4];
  if (!r.read(magic, 4) || std::string_view(magic, 4) != std::string_view(kMagic, 4)) {
    throw FormatError("bad container magic (expected TACS)", 0);
  }
  const auto version = r.get<std::uint32_t>("container version");
  if (version != kContainerVersion) {
    throw FormatError("unsupported container version " + std::to_string(version), 4);
  }
  count_ = r.get<std::uint64_t>("document count");
  offset_ = r.offset();
}

std::optional<ActivationMatrix> ContainerReader::next() {
  binary::Reader r(in_);
  if (read_ == count_) {
    if (!r.at_end()) throw FormatError("trailing bytes after last document", offset_);
    return std::nullopt;
  }
  char frame[12];
  if (!r.read(frame, sizeof(frame))) {
    throw FormatError("truncated document frame (document " + std::to_string(read_ + 1) + " of " +
                          std::to_string(count_) + ")",
                      offset_ + r.offset());
  }
  const auto pmid = binary::get_le<std::uint64_t>(frame);
  const auto len = binary::get_le<std::uint32_t>(frame + 8);
  const auto block_base = offset_ + 12;

  // Grow the buffer as bytes actually arrive so a corrupt length cannot force
  // a huge allocation up front.
  std::string block;
  constexpr std::size_t kStep = 1 << 20;
  while (block.size() < len) {
    const std::size_t want = std::min<std::size_t>(kStep, len - block.size());
    const auto old = block.size();
    block.resize(old + want);
    if (!r.read(block.data() + old, want)) {
      throw FormatError("truncated document block (" + std::to_string(len) + " bytes declared)",
                        offset_ + r.offset(), pmid);
    }
  }
  auto m = decode_block(block, block_base, pmid);
  offset_ += r.offset();
  ++read_;
  return m;
}

std::vector<ActivationMatrix> read_container(std::istream& source) {
  ContainerReader reader(source);
  std::vector<ActivationMatrix> out;
  while (auto m = reader.next()) out.push_back(std::move(*m));
  return out;
}

WordAlignment align_subwords(std::span<const std::string> tokens, std::span<const std::uint8_t> special_mask,
                             std::string_view marker) {
  if (tokens.size() != special_mask.size()) {
    throw DimensionError("special mask length", tokens.size(), special_mask.size());
  }
  WordAlignment a;
  bool prev_regular = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (special_mask[i]) {
      prev_regular = false;
      continue;
    }
    const bool continuation = !marker.empty() && tokens[i].starts_with(marker);
    if (continuation && prev_regular) {
      a.groups.back().push_back(i);
    } else {
      a.groups.push_back({i});
    }
    prev_regular = true;
  }
  return a;
}

std::vector<std::string> aligned_words(std::span<const std::string> tokens, const WordAlignment& a,
                                       std::string_view marker) {
  std::vector<std::string> words;
  words.reserve(a.groups.size());
  for (const auto& g : a.groups) {
    std::string w;
    for (auto i : g) {
      std::string_view piece = tokens[i];
      if (!marker.empty() && piece.starts_with(marker)) piece.remove_prefix(marker.size());
      w += piece;
    }
    words.push_back(std::move(w));
  }
  return words;
}

bool WordVectorTable::insert(std::string word, std::span<const float> vector) {
  if (vector.size() != dimension_) throw DimensionError("word vector for '" + word + "'", dimension_, vector.size());
  if (index_.contains(word)) return false;
  index_.emplace(std::move(word), values_.size() / std::max<std::size_t>(dimension_, 1));
  values_.insert(values_.end(), vector.begin(), vector.end());
  return true;
}

std::optional<std::span<const float>> WordVectorTable::lookup(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return std::span<const float>(values_.data() + it->second * dimension_, dimension_);
}

WordVectorTable load_word_vectors(std::istream& source) {
  std::string line;
  if (!std::getline(source, line)) throw FormatError("missing word-vector header", 1);
  std::size_t count = 0, dim = 0;
  {
    std::istringstream hs(line);
    if (!(hs >> count >> dim) || dim == 0) {
      throw FormatError("word-vector header must be '<count> <dim>'", 1);
    }
    std::string extra;
    if (hs >> extra) throw FormatError("word-vector header must be '<count> <dim>'", 1);
  }
  WordVectorTable table(dim);
  std::vector<float> v(dim);
  std::size_t lineno = 1;
  std::size_t entries = 0;
  while (entries < count && std::getline(source, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) throw FormatError("empty word-vector line", lineno);
    std::size_t got = 0;
    std::string tok;
    while (ls >> tok) {
      if (got == dim) {
        throw FormatError("dimension mismatch: more than " + std::to_string(dim) + " values", lineno);
      }
      float value = 0.0f;
      const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
      if (ec != std::errc() || end != tok.data() + tok.size() || !std::isfinite(value)) {
        throw FormatError("bad number '" + tok + "'", lineno);
      }
      v[got++] = value;
    }
    if (got != dim) {
      throw FormatError("dimension mismatch: " + std::to_string(got) + " values, expected " + std::to_string(dim),
                        lineno);
    }
    table.insert(std::move(word), v);
    ++entries;
  }
  if (entries < count) {
    throw FormatError("truncated word-vector file: header declares " + std::to_string(count) + " words, found " +
                          std::to_string(entries),
                      lineno);
  }
  while (std::getline(source, line)) {
    ++lineno;
    if (!trim_is_blank(line)) {
      throw FormatError("more word-vector lines than the header declares", lineno);
    }
  }
  return table;
}

std::map<std::string, std::vector<ProbeOccurrence>> collect_probe_occurrences(
    std::span<const ActivationMatrix> docs, const std::set<std::string>& probes) {
  std::map<std::string, std::vector<ProbeOccurrence>> out;
  for (const auto& p : probes) out[p];
  if (probes.empty()) return out;
  for (const auto& m : docs) {
    for (std::size_t i = 0; i < m.token_count(); ++i) {
      const auto it = out.find(m.tokens[i]);
      if (it == out.end()) continue;
      const auto row = m.rows.row(i);
      it->second.push_back(ProbeOccurrence{m.pmid, i, std::vector<float>(row.begin(), row.end())});
    }
  }
  return out;
}

}  // namespace sciembed
