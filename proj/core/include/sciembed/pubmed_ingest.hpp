#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sciembed/error.hpp"

namespace sciembed {

// One parsed MEDLINE citation.
struct PubRecord {
  std::uint64_t pmid = 0;
  std::string title;
  std::optional<std::string> abstract;  // absent, or non-empty after trimming
  std::string journal;
  std::optional<int> year;

  friend bool operator==(const PubRecord&, const PubRecord&) = default;
};

enum class RecordVerdict { kEligibleForEncoding, kTitleOnly, kInvalid };

std::string_view to_string(RecordVerdict v) noexcept;

// Both title and abstract present and non-blank -> eligible; title alone ->
// title-only; anything else is invalid.
RecordVerdict validate_record(const PubRecord& r) noexcept;

// Gzip inflation failed. offset() is the compressed byte offset.
class StreamError : public FormatError {
 public:
  using FormatError::FormatError;
};

// The decompressed XML is malformed. path() is the open element path at the
// point of failure, e.g. "/PubmedArticleSet/PubmedArticle/MedlineCitation".
class XmlParseError : public FormatError {
 public:
  XmlParseError(const std::string& what, std::uint64_t offset, std::string path)
      : FormatError(what + " in " + path, offset), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct IngestStats {
  std::size_t citations = 0;  // MedlineCitation elements seen
  std::size_t emitted = 0;
  std::size_t skipped = 0;    // citations without a usable PMID
  // Largest amount of character data buffered for a single citation. Stays
  // flat as archives grow because only the open citation is ever held.
  std::size_t peak_buffered_bytes = 0;
};

using RecordSink = std::function<void(PubRecord&&)>;

// Streams a gzip-compressed MEDLINE/PubMed XML archive, handing each record to
// `sink` in document order. Concatenated gzip members are accepted.
IngestStats parse_archive(std::istream& source, const RecordSink& sink);

// Same as parse_archive for an already-decompressed XML stream.
IngestStats parse_xml(std::istream& source, const RecordSink& sink);

struct ParsedArchive {
  std::vector<PubRecord> records;
  IngestStats stats;
};
ParsedArchive parse_archive(std::istream& source);

// One-line skip tally, e.g. "pubmed24n0001.xml.gz: 30000 citations, 29998 records, 2 skipped".
std::string summarize(std::string_view archive_name, const IngestStats& stats);

}  // namespace sciembed
