#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <set>

#include "commands.hpp"
#include "sciembed/activation_io.hpp"
#include "sciembed/emb_file.hpp"
#include "sciembed/error.hpp"
#include "sciembed/eval_retrieval.hpp"
#include "sciembed/fs_util.hpp"
#include "sciembed/geometry.hpp"
#include "sciembed/half.hpp"

namespace sciembed::cli {

namespace {

template <typename Options, typename Fn>
std::shared_ptr<Options> bind(CLI::App* sub, Action& selected, Fn fn) {
  auto opts = std::make_shared<Options>();
  sub->callback([opts, &selected, fn] { selected = [opts, fn](const Context& c) { return fn(*opts, c); }; });
  return opts;
}

// ---- bench ----------------------------------------------------------------

struct BenchOptions {
  std::string store;
  std::string space;
  std::string labels;
  std::string identifier;
  std::size_t queries = 5000;
  std::size_t k = 500;
  std::uint64_t seed = 0;
  std::string out = "-";
};

int run_bench(const BenchOptions& o, const Context& ctx) {
  RunConfig cfg;
  cfg.command = "bench";
  cfg.store = o.store;
  cfg.space_id = o.space;
  cfg.n_queries = o.queries;
  cfg.seed = o.seed;
  cfg.labels = split_list(o.labels);
  cfg.parameters["k"] = o.k;
  if (cfg.labels.size() < 2) throw UsageError("--labels needs at least two journals");

  const auto store = CorpusStore::open(o.store, false);
  const std::set<std::string> wanted(cfg.labels.begin(), cfg.labels.end());
  std::map<std::uint64_t, std::string> journal_of;
  for (const auto& r : store.query()) {
    if (wanted.count(r.journal)) journal_of.emplace(r.pmid, r.journal);
  }
  const auto space = store.load_space(o.space);
  std::vector<std::size_t> keep;
  std::vector<std::string> labels;
  std::vector<std::uint64_t> pmids;
  for (std::size_t i = 0; i < space.pmids.size(); ++i) {
    const auto it = journal_of.find(space.pmids[i]);
    if (it == journal_of.end()) continue;
    keep.push_back(i);
    labels.push_back(it->second);
    pmids.push_back(space.pmids[i]);
  }
  ordered_json counts = ordered_json::object();
  for (const auto& l : cfg.labels) counts[l] = std::count(labels.begin(), labels.end(), l);
  for (const auto& l : cfg.labels) {
    if (counts[l] == 0) throw ContractError("no vectors in space '" + o.space + "' for journal '" + l + "'");
  }

  const LabeledPool pool(space.vectors.select_rows(keep), labels, pmids);
  BenchmarkOptions bopt;
  bopt.identifier = o.identifier.empty() ? o.space : o.identifier;
  bopt.n_queries = o.queries;
  bopt.k = o.k;
  bopt.seed = o.seed;
  bopt.threads = ctx.threads;
  const auto report = run_benchmark(pool, bopt);

  auto doc = artifact(cfg);
  doc["pool"] = {{"size", pool.size()}, {"per_label", counts}};
  doc["report"] = report.to_json();
  emit_json(o.out, doc, ctx.out);
  (o.out == "-" ? ctx.err : ctx.out) << render_table(std::span(&report, 1));
  return kExitOk;
}

// ---- metrics --------------------------------------------------------------

struct MetricsOptions {
  std::string store;
  std::string space;
  std::string metric;
  std::vector<std::string> sets;
  std::string reference;
  std::vector<std::string> positive;
  std::vector<std::string> negative;
  std::vector<std::string> archetypes;
  std::string distance = "l2";
  double percentile = 90.0;
  std::size_t max_pairs = 2000000;
  std::uint64_t seed = 0;
  std::string container;
  std::string out = "-";
};

ordered_json result(const std::string& metric, ordered_json inputs, ordered_json value,
                    ordered_json parameters = ordered_json::object()) {
  ordered_json j;
  j["metric"] = metric;
  j["inputs"] = std::move(inputs);
  j["value"] = std::move(value);
  j["parameters"] = std::move(parameters);
  return j;
}

// Reference distance sample: every pair when affordable, otherwise
// max_pairs pairs drawn with the seed.
std::vector<double> reference_distances(const ElementSet& s, std::size_t max_pairs, std::uint64_t seed) {
  const std::size_t m = s.size();
  if (m < 2) throw ContractError("reference set '" + s.name + "' needs at least 2 elements");
  if (m * (m - 1) / 2 <= max_pairs) return pairwise_distances(s);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, m - 1);
  std::vector<double> out;
  out.reserve(max_pairs);
  while (out.size() < max_pairs) {
    const auto a = pick(rng), b = pick(rng);
    if (a == b) continue;
    out.push_back(std::sqrt(squared_l2(s.elements.row(a), s.elements.row(b))));
  }
  return out;
}

int run_metrics(const MetricsOptions& o, const Context& ctx) {
  RunConfig cfg;
  cfg.command = "metrics";
  if (!o.store.empty()) cfg.store = o.store;
  if (!o.space.empty()) cfg.space_id = o.space;
  cfg.parameters["metric"] = o.metric;

  std::optional<CorpusStore> store;
  if (!o.store.empty()) store.emplace(CorpusStore::open(o.store, false));
  const CorpusStore* sp = store ? &*store : nullptr;
  auto load = [&](const std::string& text) { return load_element_set(sp, o.space, parse_set_spec(text)); };
  auto load_all = [&](const std::vector<std::string>& texts) {
    std::vector<LoadedSet> out;
    for (const auto& t : texts) out.push_back(load(t));
    return out;
  };
  auto require_sets = [&](std::size_t n) {
    if (o.sets.size() < n) throw UsageError(o.metric + " needs at least " + std::to_string(n) + " --set");
  };

  ordered_json results = ordered_json::array();
  if (o.metric == "breadth") {
    require_sets(1);
    cfg.parameters["sets"] = o.sets;
    for (const auto& s : load_all(o.sets)) {
      ordered_json value;
      value["sigma"] = breadth_sigma(s.set);
      value["pairwise"] = s.set.size() >= 2 ? ordered_json(breadth_pairwise(s.set)) : ordered_json(nullptr);
      results.push_back(result("breadth", s.describe(), value));
    }
  } else if (o.metric == "distance") {
    if (o.sets.size() != 2) throw UsageError("distance needs exactly two --set");
    cfg.parameters["sets"] = o.sets;
    cfg.parameters["distance"] = o.distance;
    if (o.distance != "l2" && o.distance != "cosine") throw UsageError("--distance must be l2 or cosine");
    const auto sets = load_all(o.sets);
    const auto metric = o.distance == "l2" ? DistanceMetric::kL2 : DistanceMetric::kCosine;
    results.push_back(result("distance", ordered_json::array({sets[0].describe(), sets[1].describe()}),
                             set_distance(sets[0].set, sets[1].set, metric), {{"distance", o.distance}}));
  } else if (o.metric == "novelty") {
    require_sets(1);
    if (o.reference.empty()) throw UsageError("novelty needs --reference");
    cfg.parameters["sets"] = o.sets;
    cfg.parameters["reference"] = o.reference;
    cfg.parameters["percentile"] = o.percentile;
    cfg.parameters["max_pairs"] = o.max_pairs;
    cfg.seed = o.seed;
    const auto ref = load(o.reference);
    const auto sample = reference_distances(ref.set, o.max_pairs, o.seed);
    const double threshold = distance_threshold(sample, o.percentile);
    for (const auto& s : load_all(o.sets)) {
      ordered_json inputs = s.describe();
      inputs["reference"] = ref.describe();
      results.push_back(result("novelty", inputs, novelty_fraction(s.set, threshold),
                               {{"percentile", o.percentile}, {"threshold", threshold},
                                {"reference_pairs", sample.size()}}));
    }
  } else if (o.metric == "axis") {
    require_sets(1);
    if (o.positive.empty() || o.positive.size() != o.negative.size()) {
      throw UsageError("axis needs matching --positive/--negative pairs");
    }
    cfg.parameters["sets"] = o.sets;
    cfg.parameters["positive"] = o.positive;
    cfg.parameters["negative"] = o.negative;
    std::vector<ElementSet> pos, neg;
    for (auto& s : load_all(o.positive)) pos.push_back(std::move(s.set));
    for (auto& s : load_all(o.negative)) neg.push_back(std::move(s.set));
    const auto axis = build_axis(pos, neg);
    std::vector<float> dir = axis.direction;
    for (const auto& s : load_all(o.sets)) {
      ordered_json scores = ordered_json::array();
      for (std::size_t i = 0; i < s.set.size(); ++i) {
        const auto id = i < s.set.ids.size() ? ordered_json(s.set.ids[i]) : ordered_json(i);
        scores.push_back({{"id", id}, {"score", project_on_axis(s.set.elements.row(i), axis)}});
      }
      ordered_json params;
      params["positive"] = axis.positive_names;
      params["negative"] = axis.negative_names;
      results.push_back(result("axis", s.describe(), scores, params));
    }
  } else if (o.metric == "archetype") {
    require_sets(1);
    if (o.archetypes.size() < 2) throw UsageError("archetype needs at least two --archetype");
    cfg.parameters["sets"] = o.sets;
    cfg.parameters["archetypes"] = o.archetypes;
    Matrix anchors;
    ordered_json names = ordered_json::array();
    for (const auto& a : load_all(o.archetypes)) {
      const auto c = centroid(a.set);
      anchors.append_row(std::vector<float>(c.begin(), c.end()));
      names.push_back(a.set.name);
    }
    for (const auto& s : load_all(o.sets)) {
      ordered_json rows = ordered_json::array();
      for (std::size_t i = 0; i < s.set.size(); ++i) {
        const auto mix = archetype_mixture(s.set.elements.row(i), anchors);
        const auto id = i < s.set.ids.size() ? ordered_json(s.set.ids[i]) : ordered_json(i);
        rows.push_back(
            {{"id", id}, {"weights", mix.weights}, {"residual", mix.residual}, {"degenerate", mix.degenerate}});
      }
      results.push_back(result("archetype", s.describe(), rows, {{"archetypes", names}}));
    }
  } else if (o.metric == "perplexity") {
    if (o.container.empty()) throw UsageError("perplexity needs --in <container>");
    cfg.parameters["container"] = o.container;
    std::ifstream in(o.container, std::ios::binary);
    if (!in) throw IoError("cannot open " + o.container);
    ContainerReader reader(in);
    while (auto m = reader.next()) {
      if (!m->losses) throw FormatError("document carries no losses", 0, m->pmid);
      // Specials bracket the text; they are not predictions of it.
      std::vector<double> losses;
      for (std::size_t i = 0; i < m->token_count(); ++i) {
        if (!m->is_special(i)) losses.push_back((*m->losses)[i]);
      }
      if (losses.empty()) throw FormatError("document has no regular tokens", 0, m->pmid);
      results.push_back(result("perplexity", {{"pmid", m->pmid}, {"tokens", losses.size()}}, perplexity(losses)));
    }
  } else {
    throw UsageError("unknown metric '" + o.metric + "'");
  }

  auto doc = artifact(cfg);
  doc["results"] = results;
  emit_json(o.out, doc, ctx.out);
  return kExitOk;
}

// ---- export-map -----------------------------------------------------------

struct MapOptions {
  std::string store;
  std::string space;
  std::string method = "pca";
  std::size_t dims = 2;
  std::size_t sample = 100000;
  std::uint64_t seed = 0;
  std::string bridge;
  std::string out;
};

std::string tsv_header() { return "pmid\tx\ty\n"; }

// Checks a bridge-produced map against the pmids it was asked to project.
std::string check_bridge_map(const std::filesystem::path& path, const std::vector<std::uint64_t>& pmids) {
  const auto text = read_file(path);
  if (text.rfind(tsv_header(), 0) != 0) throw FormatError("bridge map lacks the 'pmid\\tx\\ty' header", 0);
  std::string body = tsv_header();
  std::size_t line_no = 1, row = 0;
  std::size_t pos = tsv_header().size();
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_list(line, '\t');
    if (fields.size() != 3) throw FormatError("bridge map row needs 3 fields", line_no);
    if (row >= pmids.size() || parse_pmid(fields[0], "bridge map") != pmids[row]) {
      throw FormatError("bridge map rows do not follow the projected pmids", line_no);
    }
    for (int c = 1; c < 3; ++c) {
      float v = 0.0f;
      const auto& f = fields[c];
      const auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || end != f.data() + f.size() || !std::isfinite(v)) {
        throw FormatError("bad coordinate '" + f + "' in bridge map", line_no);
      }
    }
    body += line + "\n";
    ++row;
  }
  if (row != pmids.size()) {
    throw FormatError("bridge map has " + std::to_string(row) + " rows, expected " + std::to_string(pmids.size()),
                      line_no);
  }
  return body;
}

int run_export_map(const MapOptions& o, const Context& ctx) {
  if (o.dims != 2) throw UsageError("--dims must be 2 (the map format has x and y only)");
  if (o.method != "pca" && o.method != "umap") throw UsageError("--method must be pca or umap");
  if (o.method == "umap" && o.bridge.empty()) throw UsageError("--method umap needs --bridge");

  RunConfig cfg;
  cfg.command = "export-map";
  cfg.store = o.store;
  cfg.space_id = o.space;
  cfg.dims = o.dims;
  cfg.seed = o.seed;
  cfg.mean_sample = o.sample;
  cfg.parameters["method"] = o.method;
  cfg.parameters["out"] = o.out;

  const auto store = CorpusStore::open(o.store, false);
  const auto all = store.load_space(o.space);
  if (all.pmids.size() < 3) throw ContractError("space '" + o.space + "' needs at least 3 vectors for a map");
  const auto idx = sample_indices(all.pmids.size(), o.sample, o.seed);
  auto meta = artifact(cfg);
  meta["rows"] = all.pmids.size();
  meta["reference_rows"] = idx.size();

  std::string body;
  if (o.method == "pca") {
    const auto space = fit_space(all.vectors.select_rows(idx), 2, o.space + "_map", o.seed);
    const auto xy = apply_pca(space, all.vectors);
    body = tsv_header();
    for (std::size_t i = 0; i < xy.rows(); ++i) {
      body += std::to_string(all.pmids[i]) + "\t" + format_float(xy(i, 0)) + "\t" + format_float(xy(i, 1)) + "\n";
    }
    meta["explained_variance"] = space.explained_variance;
  } else {
    std::filesystem::path work = o.out;
    work += ".work";
    std::filesystem::remove_all(work);
    std::filesystem::create_directories(work);
    std::vector<std::uint64_t> ref_pmids;
    for (auto i : idx) ref_pmids.push_back(all.pmids[i]);
    write_emb_file(work / "reference.emb", EmbShard::from_matrix(ref_pmids, all.vectors.select_rows(idx)));
    write_emb_file(work / "project.emb", EmbShard::from_matrix(all.pmids, all.vectors));
    const std::vector<std::string> args{"umap",  "--reference", (work / "reference.emb").string(),
                                        "--project", (work / "project.emb").string(),
                                        "--out", (work / "map.tsv").string(),
                                        "--seed", std::to_string(o.seed)};
    const int status = run_process(o.bridge, args);
    if (status != 0) {
      throw Error("bridge " + o.bridge + " exited with status " + std::to_string(status));
    }
    body = check_bridge_map(work / "map.tsv", all.pmids);
    std::filesystem::remove_all(work);
    meta["bridge"] = o.bridge;
  }
  write_tsv(o.out, body, meta);
  ctx.err << "export-map: " << all.pmids.size() << " rows -> " << o.out << "\n";
  return kExitOk;
}

}  // namespace

void register_analysis_commands(CLI::App& app, Action& selected) {
  {
    auto* sub = app.add_subcommand("bench", "Journal-discriminability benchmark (precision@k, precision@R, MAP@R)");
    auto o = bind<BenchOptions>(sub, selected, run_bench);
    sub->add_option("--store", o->store, "Store directory")->required();
    sub->add_option("--space", o->space, "Space id")->required();
    sub->add_option("--labels", o->labels, "Comma-separated journal names")->required();
    sub->add_option("--queries", o->queries, "Queries sampled without replacement")->check(CLI::PositiveNumber);
    sub->add_option("--k", o->k, "Neighbours for precision@k")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o->seed, "Query sampling seed");
    sub->add_option("--identifier", o->identifier, "Row name in the table (default: the space id)");
    sub->add_option("--out", o->out, "Report path, '-' for stdout");
  }
  {
    auto* sub = app.add_subcommand("metrics", "Semantic metrics over element sets");
    auto o = bind<MetricsOptions>(sub, selected, run_metrics);
    sub->add_option("--metric", o->metric, "breadth | distance | novelty | axis | archetype | perplexity")
        ->required();
    sub->add_option("--store", o->store, "Store directory");
    sub->add_option("--space", o->space, "Space id the sets are drawn from");
    sub->add_option("--set", o->sets,
                    "NAME=SELECTOR; SELECTOR is journal:<j>, year:<y>, pmids:<a,b>, pmid-file:<path>, "
                    "emb:<path> or all");
    sub->add_option("--reference", o->reference, "Reference set for the novelty threshold");
    sub->add_option("--percentile", o->percentile, "Novelty percentile")->check(CLI::Range(0.0, 100.0));
    sub->add_option("--max-pairs", o->max_pairs, "Cap on reference pairs")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o->seed, "Seed for reference pair sampling");
    sub->add_option("--positive", o->positive, "Positive pole set (axis); repeatable");
    sub->add_option("--negative", o->negative, "Negative pole set (axis); repeatable");
    sub->add_option("--archetype", o->archetypes, "Archetype set (centroid is the anchor); repeatable");
    sub->add_option("--distance", o->distance, "l2 | cosine");
    sub->add_option("--in", o->container, "Container with losses (perplexity)")->check(CLI::ExistingFile);
    sub->add_option("--out", o->out, "Report path, '-' for stdout");
  }
  {
    auto* sub = app.add_subcommand("export-map", "Write 2D map coordinates as pmid<TAB>x<TAB>y");
    auto o = bind<MapOptions>(sub, selected, run_export_map);
    sub->add_option("--store", o->store, "Store directory")->required();
    sub->add_option("--space", o->space, "Space id")->required();
    sub->add_option("--out", o->out, "Output TSV")->required();
    sub->add_option("--method", o->method, "pca | umap");
    sub->add_option("--dims", o->dims, "Map dimension (2)");
    sub->add_option("--sample", o->sample, "Reference rows for the fit")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o->seed, "Reference sampling seed");
    sub->add_option("--bridge", o->bridge, "Bridge executable for --method umap");
  }
}

}  // namespace sciembed::cli
