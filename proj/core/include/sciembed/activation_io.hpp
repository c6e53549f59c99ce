#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sciembed/matrix.hpp"

namespace sciembed {

// Top-layer activations for one encoded document.
struct ActivationMatrix {
  std::uint64_t pmid = 0;
  std::vector<std::string> tokens;
  std::vector<std::uint8_t> special_mask;  // 1 = classification/separator/padding token
  Matrix rows;                             // tokens.size() x model width
  std::optional<std::vector<float>> losses;  // per-token cross-entropy, if exported

  std::size_t token_count() const noexcept { return tokens.size(); }
  std::size_t width() const noexcept { return rows.cols(); }
  bool is_special(std::size_t i) const noexcept { return special_mask[i] != 0; }

  // Throws ContractError when the invariants (aligned lengths, finite
  // activations, non-negative finite losses) do not hold.
  void validate() const;

  friend bool operator==(const ActivationMatrix&, const ActivationMatrix&) = default;
};

// "TACS" container, little-endian throughout:
//   "TACS" | u32 version (=1) | u64 document count |
//   per document: u64 pmid | u32 block length | block
//   block: u32 D | u32 T | u32 flags (bit0 = losses present) |
//          T x (u16 byte length, UTF-8 bytes) | T mask bytes (0/1) |
//          T*D f32 activations, row-major | [T f32 losses]
inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr std::uint32_t kFlagLosses = 1u;

std::uint64_t write_container(std::span<const ActivationMatrix> docs, std::ostream& sink);
std::vector<ActivationMatrix> read_container(std::istream& source);

// Streams documents one at a time so callers can validate or pool arbitrarily
// large containers. Errors are FormatError carrying the pmid and byte offset.
class ContainerReader {
 public:
  explicit ContainerReader(std::istream& source);

  std::uint64_t declared_count() const noexcept { return count_; }
  std::uint64_t documents_read() const noexcept { return read_; }
  std::optional<ActivationMatrix> next();

 private:
  std::istream& in_;
  std::uint64_t offset_ = 0;
  std::uint64_t count_ = 0;
  std::uint64_t read_ = 0;
};

struct WordAlignment {
  std::vector<std::vector<std::size_t>> groups;  // token indices per surface word

  friend bool operator==(const WordAlignment&, const WordAlignment&) = default;
};

inline constexpr std::string_view kDefaultContinuationMarker = "##";

// Groups subword tokens into surface words. A regular token that does not
// start with the marker opens a new group; a marked token joins the group of
// the token immediately before it, or opens its own group if that token is
// special or absent.
WordAlignment align_subwords(std::span<const std::string> tokens,
                             std::span<const std::uint8_t> special_mask,
                             std::string_view continuation_marker = kDefaultContinuationMarker);

// Surface words reconstructed from an alignment (markers stripped, pieces joined).
std::vector<std::string> aligned_words(std::span<const std::string> tokens, const WordAlignment& a,
                                       std::string_view continuation_marker = kDefaultContinuationMarker);

class WordVectorTable {
 public:
  WordVectorTable() = default;
  explicit WordVectorTable(std::size_t dimension) : dimension_(dimension) {}

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return index_.size(); }

  // Returns false (and leaves the table unchanged) if the word already exists.
  bool insert(std::string word, std::span<const float> vector);
  // std::nullopt is the out-of-vocabulary marker.
  std::optional<std::span<const float>> lookup(std::string_view word) const;

 private:
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<float> values_;
};

// Text format: header "<count> <dim>", then "<word> v1 ... vdim" per line.
// Duplicate words keep their first occurrence. Errors are FormatError whose
// offset() is the 1-based line number.
WordVectorTable load_word_vectors(std::istream& source);

struct ProbeOccurrence {
  std::uint64_t pmid = 0;
  std::size_t token_index = 0;
  std::vector<float> activation;

  friend bool operator==(const ProbeOccurrence&, const ProbeOccurrence&) = default;
};

// Every occurrence of every probe token, in document order. Each probe gets an
// entry even when it never occurs.
std::map<std::string, std::vector<ProbeOccurrence>> collect_probe_occurrences(
    std::span<const ActivationMatrix> docs, const std::set<std::string>& probes);

}  // namespace sciembed
