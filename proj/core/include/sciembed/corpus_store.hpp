#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sciembed/matrix.hpp"
#include "sciembed/pubmed_ingest.hpp"

namespace sciembed {

struct StoredEmbedding {
  std::uint64_t pmid = 0;
  std::string space_id;
  std::vector<float> vector;  // quantized to binary16 on write
};

struct StoreManifest {
  std::size_t record_count = 0;
  std::map<std::string, std::size_t> spaces;       // space id -> dimension
  std::map<std::string, std::size_t> journals;     // journal -> records
  std::map<std::string, std::size_t> years;        // year (or "unknown") -> records

  nlohmann::json to_json() const;
  static StoreManifest from_json(const nlohmann::json& j);
  friend bool operator==(const StoreManifest&, const StoreManifest&) = default;
};

struct RecordQuery {
  std::optional<std::string> journal;
  std::optional<int> year;
  bool require_abstract = false;
};

// All embeddings of one space, rows ordered by ascending pmid.
struct SpaceMatrix {
  std::vector<std::uint64_t> pmids;
  Matrix vectors;
};

nlohmann::ordered_json record_to_json(const PubRecord& r);
PubRecord record_from_json(const nlohmann::json& j);

// Portable on-disk corpus:
//   <root>/records.jsonl        one PubRecord per line, ascending pmid
//   <root>/manifest.json        counts and the space dimension table
//   <root>/spaces/<id>.emb      "EMB1" shard per embedding space
// Every mutating call rewrites the affected files through temp-file + rename,
// so concurrent readers only ever see committed state. One writer at a time.
class CorpusStore {
 public:
  static CorpusStore open(const std::filesystem::path& root, bool create_if_missing = true);

  CorpusStore(CorpusStore&&) noexcept;
  CorpusStore& operator=(CorpusStore&&) noexcept;
  ~CorpusStore();

  const std::filesystem::path& root() const noexcept;

  // Inserts or overwrites by pmid; returns the number of records in `records`.
  std::size_t put_records(std::span<const PubRecord> records);
  std::vector<PubRecord> query(const RecordQuery& q = {}) const;
  std::optional<PubRecord> get_record(std::uint64_t pmid) const;

  // Declares a space; re-registering with a different dimension is a DimensionError.
  void register_space(const std::string& space_id, std::size_t dimension);
  std::optional<std::size_t> space_dimension(const std::string& space_id) const;

  void put_embedding(const StoredEmbedding& e);
  // Batched variant: one shard rewrite for the whole span.
  void put_embeddings(const std::string& space_id, std::span<const std::uint64_t> pmids,
                      const Matrix& vectors);

  // One entry per requested pmid; std::nullopt marks a pmid with no stored vector.
  std::vector<std::optional<std::vector<float>>> get_embeddings(
      const std::string& space_id, std::span<const std::uint64_t> pmids) const;
  SpaceMatrix load_space(const std::string& space_id) const;

  StoreManifest manifest() const;

 private:
  struct Impl;
  explicit CorpusStore(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace sciembed
