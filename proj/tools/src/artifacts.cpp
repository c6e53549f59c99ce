#include <charconv>
#include <fstream>

#include "commands.hpp"
#include "sciembed/error.hpp"
#include "sciembed/fs_util.hpp"
#include "sciembed_cli/cli.hpp"

namespace sciembed::cli {

ordered_json RunConfig::to_json() const {
  ordered_json j;
  j["command"] = command;
  if (store) j["store"] = *store;
  if (space_id) j["space_id"] = *space_id;
  if (strategy) j["strategy"] = *strategy;
  if (mean_sample) j["mean_sample"] = *mean_sample;
  if (n_queries) j["n_queries"] = *n_queries;
  if (dims) j["dims"] = *dims;
  if (seed) j["seed"] = *seed;
  if (!labels.empty()) j["labels"] = labels;
  if (!parameters.empty()) j["parameters"] = parameters;
  return j;
}

ordered_json artifact(const RunConfig& config) {
  ordered_json j;
  j["tool"] = "sciembed";
  j["version"] = version();
  j["config"] = config.to_json();
  return j;
}

void emit_json(const std::string& path, const ordered_json& doc, std::ostream& out) {
  const auto text = doc.dump(2) + "\n";
  if (path == "-") {
    out << text;
    out.flush();
  } else {
    atomic_write_file(path, text);
  }
}

void write_tsv(const std::filesystem::path& path, const std::string& body, const ordered_json& meta) {
  atomic_write_file(path, body);
  auto meta_path = path;
  meta_path += ".meta.json";
  atomic_write_file(meta_path, meta.dump(2) + "\n");
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find(sep, start);
    auto item = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    item = b == std::string::npos ? std::string() : item.substr(b, e - b + 1);
    if (!item.empty()) out.push_back(std::move(item));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

std::string format_float(float v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::uint64_t parse_pmid(const std::string& text, const std::string& context) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || v == 0) {
    throw FormatError("bad pmid '" + text + "' in " + context, 0);
  }
  return v;
}

std::vector<std::pair<std::uint64_t, std::string>> read_text_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::pair<std::uint64_t, std::string>> rows;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("text TSV line without a tab", lineno);
    rows.emplace_back(parse_pmid(line.substr(0, tab), path.string() + " line " + std::to_string(lineno)),
                      line.substr(tab + 1));
  }
  return rows;
}

}  // namespace sciembed::cli
