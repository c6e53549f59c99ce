#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sciembed/corpus_store.hpp"
#include "sciembed_cli/cli.hpp"
#include "sciembed/metrics.hpp"

namespace CLI {
class App;
}

namespace sciembed::cli {

using ordered_json = nlohmann::ordered_json;

// Bad flag combinations detected after parsing; reported like parse errors.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  unsigned threads = 1;
};

using Action = std::function<int(const Context&)>;

void register_pipeline_commands(CLI::App& app, Action& selected);
void register_analysis_commands(CLI::App& app, Action& selected);

// Everything that determines an artifact's content. Echoed into every
// artifact so outputs are self-describing; carries no timestamps.
struct RunConfig {
  std::string command;
  std::optional<std::string> store;
  std::optional<std::string> space_id;
  std::optional<std::string> strategy;
  std::optional<std::size_t> mean_sample;
  std::optional<std::size_t> n_queries;
  std::optional<std::size_t> dims;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> labels;
  ordered_json parameters = ordered_json::object();

  ordered_json to_json() const;
};

// {"tool", "version", "config"} header shared by every JSON artifact.
ordered_json artifact(const RunConfig& config);

// "-" writes to `out`; anything else is written atomically.
void emit_json(const std::string& path, const ordered_json& doc, std::ostream& out);

// Writes a TSV artifact plus "<path>.meta.json".
void write_tsv(const std::filesystem::path& path, const std::string& body, const ordered_json& meta);

std::vector<std::string> split_list(const std::string& text, char sep = ',');
std::string format_float(float v);

// "pmid<TAB>text" lines, as written by `prep`.
std::vector<std::pair<std::uint64_t, std::string>> read_text_tsv(const std::filesystem::path& path);

std::uint64_t parse_pmid(const std::string& text, const std::string& context);

// NAME=SELECTOR with SELECTOR one of journal:<name>, year:<yyyy>,
// pmids:<a,b,...>, pmid-file:<path>, emb:<path>, all.
struct SetSpec {
  std::string name;
  std::string kind;
  std::string argument;
};

SetSpec parse_set_spec(const std::string& text);

struct LoadedSet {
  ElementSet set;
  std::size_t requested = 0;  // pmids selected before dropping those without a vector
  ordered_json describe() const;
};

LoadedSet load_element_set(const CorpusStore* store, const std::string& space, const SetSpec& spec);

// Runs `executable args...` without a shell and waits for it. Returns the
// exit status; throws IoError if the process cannot be started.
int run_process(const std::string& executable, const std::vector<std::string>& args);

}  // namespace sciembed::cli
