#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

#include "commands.hpp"
#include "sciembed/emb_file.hpp"
#include "sciembed/error.hpp"

namespace sciembed::cli {

SetSpec parse_set_spec(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("set '" + text + "' must look like NAME=SELECTOR");
  SetSpec spec;
  spec.name = text.substr(0, eq);
  const auto selector = text.substr(eq + 1);
  if (selector == "all") {
    spec.kind = "all";
    return spec;
  }
  const auto colon = selector.find(':');
  if (colon == std::string::npos) throw UsageError("selector '" + selector + "' has no kind");
  spec.kind = selector.substr(0, colon);
  spec.argument = selector.substr(colon + 1);
  static const std::set<std::string> kinds{"journal", "year", "pmids", "pmid-file", "emb"};
  if (!kinds.count(spec.kind)) throw UsageError("unknown selector kind '" + spec.kind + "'");
  if (spec.argument.empty()) throw UsageError("selector '" + selector + "' is missing its argument");
  return spec;
}

ordered_json LoadedSet::describe() const {
  ordered_json j;
  j["name"] = set.name;
  j["requested"] = requested;
  j["size"] = set.size();
  return j;
}

namespace {

std::vector<std::uint64_t> select_pmids(const CorpusStore& store, const SetSpec& spec) {
  if (spec.kind == "pmids") {
    std::vector<std::uint64_t> out;
    for (const auto& p : split_list(spec.argument)) out.push_back(parse_pmid(p, "set " + spec.name));
    return out;
  }
  if (spec.kind == "pmid-file") {
    std::ifstream in(spec.argument);
    if (!in) throw IoError("cannot open " + spec.argument);
    std::vector<std::uint64_t> out;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) out.push_back(parse_pmid(line, spec.argument));
    }
    return out;
  }
  RecordQuery q;
  if (spec.kind == "journal") q.journal = spec.argument;
  if (spec.kind == "year") {
    int year = 0;
    const auto& a = spec.argument;
    const auto [end, ec] = std::from_chars(a.data(), a.data() + a.size(), year);
    if (ec != std::errc() || end != a.data() + a.size()) throw UsageError("bad year '" + a + "'");
    q.year = year;
  }
  std::vector<std::uint64_t> out;
  for (const auto& r : store.query(q)) out.push_back(r.pmid);
  return out;
}

}  // namespace

LoadedSet load_element_set(const CorpusStore* store, const std::string& space, const SetSpec& spec) {
  LoadedSet loaded;
  loaded.set.name = spec.name;
  if (spec.kind == "emb") {
    const auto shard = read_emb_file(spec.argument);
    loaded.requested = shard.size();
    loaded.set.elements = shard.to_matrix();
    loaded.set.ids = shard.pmids;
    return loaded;
  }
  if (!store) throw UsageError("set '" + spec.name + "' needs --store");
  if (spec.kind == "all") {
    auto m = store->load_space(space);
    loaded.requested = m.pmids.size();
    loaded.set.elements = std::move(m.vectors);
    loaded.set.ids = std::move(m.pmids);
    return loaded;
  }
  const auto pmids = select_pmids(*store, spec);
  loaded.requested = pmids.size();
  const auto dim = store->space_dimension(space);
  if (!dim) throw ContractError("space '" + space + "' is not registered");
  const auto vectors = store->get_embeddings(space, pmids);
  loaded.set.elements = Matrix(0, *dim);
  for (std::size_t i = 0; i < pmids.size(); ++i) {
    if (!vectors[i]) continue;
    loaded.set.elements.append_row(*vectors[i]);
    loaded.set.ids.push_back(pmids[i]);
  }
  return loaded;
}

}  // namespace sciembed::cli
