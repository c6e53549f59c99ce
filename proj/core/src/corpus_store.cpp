#include "sciembed/corpus_store.hpp"

#include <fstream>
#include <mutex>
#include <shared_mutex>
#include <sstream>

#include "sciembed/emb_file.hpp"
#include "sciembed/error.hpp"
#include "sciembed/fs_util.hpp"
#include "sciembed/half.hpp"

namespace fs = std::filesystem;

namespace sciembed {

namespace {

constexpr auto kRecordsFile = "records.jsonl";
constexpr auto kManifestFile = "manifest.json";
constexpr auto kSpacesDir = "spaces";

std::string year_key(const std::optional<int>& year) {
  return year ? std::to_string(*year) : std::string("unknown");
}

bool valid_space_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

struct Shard {
  std::size_t dimension = 0;
  std::map<std::uint64_t, std::vector<std::uint16_t>> entries;
};

}  // namespace

nlohmann::json StoreManifest::to_json() const {
  nlohmann::json j;
  j["record_count"] = record_count;
  j["spaces"] = nlohmann::json::object();
  for (const auto& [k, v] : spaces) j["spaces"][k] = v;
  j["journals"] = nlohmann::json::object();
  for (const auto& [k, v] : journals) j["journals"][k] = v;
  j["years"] = nlohmann::json::object();
  for (const auto& [k, v] : years) j["years"][k] = v;
  return j;
}

StoreManifest StoreManifest::from_json(const nlohmann::json& j) {
  StoreManifest m;
  m.record_count = j.at("record_count").get<std::size_t>();
  for (const auto& [k, v] : j.at("spaces").items()) m.spaces[k] = v.get<std::size_t>();
  for (const auto& [k, v] : j.at("journals").items()) m.journals[k] = v.get<std::size_t>();
  for (const auto& [k, v] : j.at("years").items()) m.years[k] = v.get<std::size_t>();
  return m;
}

nlohmann::ordered_json record_to_json(const PubRecord& r) {
  nlohmann::ordered_json j;
  j["pmid"] = r.pmid;
  j["title"] = r.title;
  j["abstract"] = r.abstract ? nlohmann::ordered_json(*r.abstract) : nlohmann::ordered_json(nullptr);
  j["journal"] = r.journal;
  j["year"] = r.year ? nlohmann::ordered_json(*r.year) : nlohmann::ordered_json(nullptr);
  return j;
}

PubRecord record_from_json(const nlohmann::json& j) {
  PubRecord r;
  r.pmid = j.at("pmid").get<std::uint64_t>();
  r.title = j.at("title").get<std::string>();
  if (!j.at("abstract").is_null()) r.abstract = j.at("abstract").get<std::string>();
  r.journal = j.at("journal").get<std::string>();
  if (!j.at("year").is_null()) r.year = j.at("year").get<int>();
  return r;
}

struct CorpusStore::Impl {
  fs::path root;
  mutable std::shared_mutex mu;
  std::map<std::uint64_t, PubRecord> records;
  std::map<std::string, Shard> shards;

  fs::path shard_path(const std::string& id) const { return root / kSpacesDir / (id + ".emb"); }

  StoreManifest build_manifest() const {
    StoreManifest m;
    m.record_count = records.size();
    for (const auto& [id, shard] : shards) m.spaces[id] = shard.dimension;
    for (const auto& [pmid, r] : records) {
      ++m.journals[r.journal];
      ++m.years[year_key(r.year)];
    }
    return m;
  }

  void write_manifest() const {
    atomic_write_file(root / kManifestFile, build_manifest().to_json().dump(2) + "\n");
  }

  void write_records() const {
    std::string out;
    for (const auto& [pmid, r] : records) {
      out += record_to_json(r).dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
      out += '\n';
    }
    atomic_write_file(root / kRecordsFile, out);
  }

  void write_shard(const std::string& id) const {
    const auto& shard = shards.at(id);
    EmbShard img;
    img.dimension = static_cast<std::uint32_t>(shard.dimension);
    img.pmids.reserve(shard.entries.size());
    img.values.reserve(shard.entries.size() * shard.dimension);
    for (const auto& [pmid, v] : shard.entries) {
      img.pmids.push_back(pmid);
      img.values.insert(img.values.end(), v.begin(), v.end());
    }
    write_emb_file(shard_path(id), img);
  }

  void load() {
    const auto rec_path = root / kRecordsFile;
    if (fs::exists(rec_path)) {
      std::ifstream in(rec_path, std::ios::binary);
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
          auto r = record_from_json(nlohmann::json::parse(line));
          records[r.pmid] = std::move(r);
        } catch (const nlohmann::json::exception& e) {
          throw FormatError(std::string("bad record line: ") + e.what(), lineno);
        }
      }
    }
    const auto man_path = root / kManifestFile;
    if (fs::exists(man_path)) {
      StoreManifest m;
      try {
        m = StoreManifest::from_json(nlohmann::json::parse(read_file(man_path)));
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad manifest: ") + e.what(), 0);
      }
      for (const auto& [id, dim] : m.spaces) {
        Shard shard;
        shard.dimension = dim;
        const auto p = shard_path(id);
        if (fs::exists(p)) {
          const auto img = read_emb_file(p);
          if (img.dimension != dim) throw DimensionError("shard " + id + " dimension", dim, img.dimension);
          for (std::size_t i = 0; i < img.size(); ++i) {
            const auto e = img.entry(i);
            shard.entries[img.pmids[i]] = std::vector<std::uint16_t>(e.begin(), e.end());
          }
        }
        shards.emplace(id, std::move(shard));
      }
    }
  }
};

CorpusStore::CorpusStore(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
CorpusStore::CorpusStore(CorpusStore&&) noexcept = default;
CorpusStore& CorpusStore::operator=(CorpusStore&&) noexcept = default;
CorpusStore::~CorpusStore() = default;

CorpusStore CorpusStore::open(const fs::path& root, bool create_if_missing) {
  auto impl = std::make_unique<Impl>();
  impl->root = root;
  std::error_code ec;
  if (!fs::exists(root)) {
    if (!create_if_missing) throw IoError("store " + root.string() + " does not exist");
    fs::create_directories(root / kSpacesDir, ec);
    if (ec) throw IoError("cannot create store at " + root.string() + ": " + ec.message());
    impl->write_records();
    impl->write_manifest();
  } else {
    fs::create_directories(root / kSpacesDir, ec);
    impl->load();
  }
  return CorpusStore(std::move(impl));
}

const fs::path& CorpusStore::root() const noexcept { return impl_->root; }

std::size_t CorpusStore::put_records(std::span<const PubRecord> records) {
  if (records.empty()) return 0;
  std::unique_lock lock(impl_->mu);
  auto previous = impl_->records;
  for (const auto& r : records) {
    if (r.pmid == 0) throw ContractError("record with pmid 0");
    impl_->records[r.pmid] = r;
  }
  try {
    impl_->write_records();
    impl_->write_manifest();
  } catch (...) {
    impl_->records = std::move(previous);
    throw;
  }
  return records.size();
}

std::vector<PubRecord> CorpusStore::query(const RecordQuery& q) const {
  std::shared_lock lock(impl_->mu);
  std::vector<PubRecord> out;
  for (const auto& [pmid, r] : impl_->records) {
    if (q.journal && r.journal != *q.journal) continue;
    if (q.year && r.year != q.year) continue;
    if (q.require_abstract && validate_record(r) != RecordVerdict::kEligibleForEncoding) continue;
    out.push_back(r);
  }
  return out;
}

std::optional<PubRecord> CorpusStore::get_record(std::uint64_t pmid) const {
  std::shared_lock lock(impl_->mu);
  const auto it = impl_->records.find(pmid);
  if (it == impl_->records.end()) return std::nullopt;
  return it->second;
}

void CorpusStore::register_space(const std::string& space_id, std::size_t dimension) {
  if (!valid_space_id(space_id)) throw ContractError("invalid space id '" + space_id + "'");
  if (dimension == 0) throw ContractError("space dimension must be positive");
  std::unique_lock lock(impl_->mu);
  const auto it = impl_->shards.find(space_id);
  if (it != impl_->shards.end()) {
    if (it->second.dimension != dimension) {
      throw DimensionError("space " + space_id + " already registered", it->second.dimension, dimension);
    }
    return;
  }
  Shard shard;
  shard.dimension = dimension;
  impl_->shards.emplace(space_id, std::move(shard));
  impl_->write_shard(space_id);
  impl_->write_manifest();
}

std::optional<std::size_t> CorpusStore::space_dimension(const std::string& space_id) const {
  std::shared_lock lock(impl_->mu);
  const auto it = impl_->shards.find(space_id);
  if (it == impl_->shards.end()) return std::nullopt;
  return it->second.dimension;
}

void CorpusStore::put_embedding(const StoredEmbedding& e) {
  Matrix m(1, e.vector.size(), e.vector);
  const std::uint64_t pmid = e.pmid;
  put_embeddings(e.space_id, std::span(&pmid, 1), m);
}

void CorpusStore::put_embeddings(const std::string& space_id, std::span<const std::uint64_t> pmids,
                                 const Matrix& vectors) {
  std::unique_lock lock(impl_->mu);
  const auto it = impl_->shards.find(space_id);
  if (it == impl_->shards.end()) throw ContractError("space '" + space_id + "' is not registered");
  auto& shard = it->second;
  if (vectors.rows() > 0 && vectors.cols() != shard.dimension) {
    throw DimensionError("embedding for space " + space_id, shard.dimension, vectors.cols());
  }
  // Quantize everything first so a bad value leaves the shard untouched.
  const auto img = EmbShard::from_matrix(pmids, vectors);
  auto previous = shard.entries;
  for (std::size_t i = 0; i < img.size(); ++i) {
    const auto e = img.entry(i);
    shard.entries[img.pmids[i]] = std::vector<std::uint16_t>(e.begin(), e.end());
  }
  try {
    impl_->write_shard(space_id);
  } catch (...) {
    shard.entries = std::move(previous);
    throw;
  }
}

std::vector<std::optional<std::vector<float>>> CorpusStore::get_embeddings(
    const std::string& space_id, std::span<const std::uint64_t> pmids) const {
  std::shared_lock lock(impl_->mu);
  std::vector<std::optional<std::vector<float>>> out(pmids.size());
  const auto it = impl_->shards.find(space_id);
  if (it == impl_->shards.end()) return out;
  for (std::size_t i = 0; i < pmids.size(); ++i) {
    const auto e = it->second.entries.find(pmids[i]);
    if (e != it->second.entries.end()) out[i] = from_half(e->second);
  }
  return out;
}

SpaceMatrix CorpusStore::load_space(const std::string& space_id) const {
  std::shared_lock lock(impl_->mu);
  const auto it = impl_->shards.find(space_id);
  if (it == impl_->shards.end()) throw ContractError("space '" + space_id + "' is not registered");
  SpaceMatrix out;
  out.vectors = Matrix(0, it->second.dimension);
  for (const auto& [pmid, v] : it->second.entries) {
    out.pmids.push_back(pmid);
    out.vectors.append_row(from_half(v));
  }
  return out;
}

StoreManifest CorpusStore::manifest() const {
  std::shared_lock lock(impl_->mu);
  return impl_->build_manifest();
}

}  // namespace sciembed
