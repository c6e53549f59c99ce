#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <thread>

#include "commands.hpp"
#include "sciembed/activation_io.hpp"
#include "sciembed/error.hpp"
#include "sciembed/geometry.hpp"
#include "sciembed/pooling.hpp"
#include "sciembed/pubmed_ingest.hpp"
#include "sciembed/text_prep.hpp"

namespace sciembed::cli {

namespace {

// ---- ingest ---------------------------------------------------------------

struct IngestOptions {
  std::vector<std::string> archives;
  std::string store;
  std::string report = "-";
};

int run_ingest(const IngestOptions& o, const Context& ctx) {
  RunConfig cfg;
  cfg.command = "ingest";
  cfg.store = o.store;
  cfg.parameters["archives"] = o.archives;

  auto store = CorpusStore::open(o.store);
  ordered_json per_archive = ordered_json::array();
  for (const auto& path : o.archives) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    auto parsed = parse_archive(in);
    store.put_records(parsed.records);
    ctx.err << summarize(std::filesystem::path(path).filename().string(), parsed.stats) << "\n";
    per_archive.push_back({{"archive", path},
                           {"citations", parsed.stats.citations},
                           {"records", parsed.stats.emitted},
                           {"skipped", parsed.stats.skipped}});
  }
  auto doc = artifact(cfg);
  doc["archives"] = per_archive;
  doc["store"] = store.manifest().to_json();
  emit_json(o.report, doc, ctx.out);
  return kExitOk;
}

// ---- prep -----------------------------------------------------------------

struct PrepOptions {
  std::string store;
  std::string out;
  std::string labels;
};

// The TSV is line- and tab-delimited, so those bytes cannot survive inside a
// text field.
std::string tsv_safe(std::string s) {
  for (auto& c : s) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

int run_prep(const PrepOptions& o, const Context& ctx) {
  RunConfig cfg;
  cfg.command = "prep";
  cfg.store = o.store;
  cfg.labels = split_list(o.labels);
  cfg.parameters["out"] = o.out;

  const auto store = CorpusStore::open(o.store, false);
  const std::set<std::string> journals(cfg.labels.begin(), cfg.labels.end());
  std::string body;
  std::size_t rows = 0, title_only = 0, invalid = 0;
  for (const auto& r : store.query()) {
    if (!journals.empty() && !journals.count(r.journal)) continue;
    switch (validate_record(r)) {
      case RecordVerdict::kTitleOnly:
        ++title_only;
        continue;
      case RecordVerdict::kInvalid:
        ++invalid;
        continue;
      case RecordVerdict::kEligibleForEncoding:
        break;
    }
    const auto text = normalize(r.title, *r.abstract, r.pmid);
    body += std::to_string(r.pmid) + "\t" + tsv_safe(text.text) + "\n";
    ++rows;
  }
  auto meta = artifact(cfg);
  meta["rows"] = rows;
  meta["skipped_title_only"] = title_only;
  meta["skipped_invalid"] = invalid;
  write_tsv(o.out, body, meta);
  ctx.err << "prep: " << rows << " texts, " << title_only << " title-only skipped\n";
  return kExitOk;
}

// ---- pool -----------------------------------------------------------------

struct PoolOptions {
  std::string store;
  std::string space;
  std::string strategy;
  std::string container;
  std::string texts;
  std::string vectors;
  std::size_t min_chars = kDefaultLongTokenChars;
  std::string marker = std::string(kDefaultContinuationMarker);
  std::string report = "-";
};

// Punctuation peeled off whitespace-split words before the static lookup.
// '<' and '>' stay so the number mask survives.
std::string strip_word(std::string_view w) {
  constexpr std::string_view kPunct = ".,;:!?()[]{}\"'";
  const auto b = w.find_first_not_of(kPunct);
  if (b == std::string_view::npos) return {};
  const auto e = w.find_last_not_of(kPunct);
  return std::string(w.substr(b, e - b + 1));
}

std::vector<std::string> static_words(const std::string& text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      auto w = strip_word(std::string_view(text).substr(i, j - i));
      if (!w.empty()) words.push_back(std::move(w));
    }
    i = j;
  }
  return words;
}

struct PoolOutcome {
  std::optional<PooledVector> vector;
  std::string skip_reason;
};

template <typename Fn>
std::vector<PoolOutcome> parallel_pool(std::size_t n, unsigned threads, Fn&& fn) {
  std::vector<PoolOutcome> out(n);
  auto work = [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      try {
        out[i].vector = fn(i);
      } catch (const EmptyPoolError& ex) {
        out[i].skip_reason = ex.what();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    work(0, n);
    return out;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t b = t * chunk, e = std::min(n, b + chunk);
    if (b < e) pool.emplace_back(work, b, e);
  }
  return out;
}

int run_pool(const PoolOptions& o, const Context& ctx) {
  const auto strategy = parse_pooling_strategy(o.strategy);
  if (!strategy) throw UsageError("unknown pooling strategy '" + o.strategy + "'");
  const bool is_static = *strategy == PoolingStrategy::kStaticMean;
  if (is_static && (o.texts.empty() || o.vectors.empty())) {
    throw UsageError("static_mean pooling needs --texts and --vectors");
  }
  if (!is_static && o.container.empty()) throw UsageError(o.strategy + " pooling needs --in <container>");

  RunConfig cfg;
  cfg.command = "pool";
  cfg.store = o.store;
  cfg.space_id = o.space;
  cfg.strategy = o.strategy;
  if (is_static) {
    cfg.parameters["texts"] = o.texts;
    cfg.parameters["vectors"] = o.vectors;
  } else {
    cfg.parameters["container"] = o.container;
    if (*strategy == PoolingStrategy::kMeanLongTokens) cfg.parameters["min_chars"] = o.min_chars;
    cfg.parameters["continuation_marker"] = o.marker;
  }

  auto store = CorpusStore::open(o.store);
  std::vector<PoolOutcome> outcomes;
  std::vector<std::uint64_t> ids;
  if (is_static) {
    std::ifstream vin(o.vectors);
    if (!vin) throw IoError("cannot open " + o.vectors);
    const auto table = load_word_vectors(vin);
    const auto texts = read_text_tsv(o.texts);
    for (const auto& t : texts) ids.push_back(t.first);
    outcomes = parallel_pool(texts.size(), ctx.threads, [&](std::size_t i) {
      const auto words = static_words(texts[i].second);
      return pool_static_mean(words, table, texts[i].first);
    });
  } else {
    std::ifstream in(o.container, std::ios::binary);
    if (!in) throw IoError("cannot open " + o.container);
    ContainerReader reader(in);
    PoolingOptions popt;
    popt.min_chars = o.min_chars;
    popt.continuation_marker = o.marker;
    // Pool in bounded batches so large containers never sit in memory whole.
    constexpr std::size_t kBatch = 512;
    std::vector<ActivationMatrix> batch;
    auto flush = [&] {
      auto part = parallel_pool(batch.size(), ctx.threads,
                                [&](std::size_t i) { return pool(batch[i], *strategy, popt); });
      for (std::size_t i = 0; i < batch.size(); ++i) ids.push_back(batch[i].pmid);
      std::move(part.begin(), part.end(), std::back_inserter(outcomes));
      batch.clear();
    };
    while (auto m = reader.next()) {
      batch.push_back(std::move(*m));
      if (batch.size() == kBatch) flush();
    }
    flush();
  }

  std::vector<std::uint64_t> pmids;
  Matrix rows;
  std::size_t fallbacks = 0;
  ordered_json skipped = ordered_json::array();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].vector) {
      skipped.push_back({{"pmid", ids[i]}, {"reason", outcomes[i].skip_reason}});
      continue;
    }
    rows.append_row(outcomes[i].vector->values);
    pmids.push_back(ids[i]);
    fallbacks += outcomes[i].vector->fallback;
  }
  if (!pmids.empty()) {
    store.register_space(o.space, rows.cols());
    store.put_embeddings(o.space, pmids, rows);
  }
  auto doc = artifact(cfg);
  doc["documents"] = outcomes.size();
  doc["pooled"] = pmids.size();
  doc["dimension"] = rows.cols();
  if (*strategy == PoolingStrategy::kMeanLongTokens) doc["long_token_fallbacks"] = fallbacks;
  doc["skipped"] = skipped;
  emit_json(o.report, doc, ctx.out);
  return pmids.empty() && !outcomes.empty() ? kExitData : kExitOk;
}

// ---- fit-space ------------------------------------------------------------

struct FitOptions {
  std::string store;
  std::string space;
  std::string out_space;
  std::size_t dims = 100;
  std::size_t sample = 100000;
  std::uint64_t seed = 0;
  std::size_t anisotropy_pairs = 10000;
  std::string report = "-";
};

ordered_json anisotropy_json(const Matrix& m, std::size_t pairs, std::uint64_t seed) {
  try {
    const auto a = anisotropy(m, pairs, seed);
    return {{"mean_cosine", a.mean_cosine}, {"pairs", a.pairs}, {"resampled", a.resampled}};
  } catch (const ContractError&) {
    return nullptr;
  }
}

int run_fit_space(const FitOptions& o, const Context& ctx) {
  RunConfig cfg;
  cfg.command = "fit-space";
  cfg.store = o.store;
  cfg.space_id = o.space;
  cfg.mean_sample = o.sample;
  cfg.dims = o.dims;
  cfg.seed = o.seed;
  cfg.parameters["out_space"] = o.out_space;
  cfg.parameters["anisotropy_pairs"] = o.anisotropy_pairs;

  auto store = CorpusStore::open(o.store, false);
  const auto all = store.load_space(o.space);
  if (all.pmids.empty()) throw ContractError("space '" + o.space + "' holds no vectors");
  const auto idx = sample_indices(all.pmids.size(), o.sample, o.seed);
  const auto sample = all.vectors.select_rows(idx);
  const auto space = fit_space(sample, o.dims, o.out_space, o.seed);
  const auto centred = demean(sample, space.mean);

  save_space(store.root() / "spaces" / (o.out_space + ".space"), space);
  const auto projected = apply_pca(space, all.vectors);
  store.register_space(o.out_space, o.dims);
  store.put_embeddings(o.out_space, all.pmids, projected);

  double total = 0.0;
  for (std::size_t j = 0; j < sample.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < centred.rows(); ++i) s += static_cast<double>(centred(i, j)) * centred(i, j);
    total += s / static_cast<double>(centred.rows() - 1);
  }

  auto doc = artifact(cfg);
  doc["input_rows"] = all.pmids.size();
  doc["sample_rows"] = idx.size();
  doc["input_dim"] = space.input_dim;
  doc["output_dim"] = space.output_dim;
  doc["total_variance"] = total;
  doc["explained_variance"] = space.explained_variance;
  doc["anisotropy"] = {{"raw", anisotropy_json(sample, o.anisotropy_pairs, o.seed)},
                       {"demeaned", anisotropy_json(centred, o.anisotropy_pairs, o.seed)}};
  emit_json(o.report, doc, ctx.out);
  return kExitOk;
}

// ---- validate-container ---------------------------------------------------

struct ValidateOptions {
  std::string container;
  std::string report = "-";
};

int run_validate(const ValidateOptions& o, const Context& ctx) {
  RunConfig cfg;
  cfg.command = "validate-container";
  cfg.parameters["container"] = o.container;

  std::ifstream in(o.container, std::ios::binary);
  if (!in) throw IoError("cannot open " + o.container);
  ContainerReader reader(in);
  std::size_t tokens = 0, with_losses = 0, unbracketed = 0;
  std::map<std::size_t, std::size_t> widths;
  while (auto m = reader.next()) {
    m->validate();
    tokens += m->token_count();
    ++widths[m->width()];
    with_losses += m->losses.has_value();
    if (m->token_count() == 0 || !m->is_special(0) || !m->is_special(m->token_count() - 1)) ++unbracketed;
  }
  auto doc = artifact(cfg);
  doc["documents"] = reader.documents_read();
  doc["tokens"] = tokens;
  ordered_json w = ordered_json::object();
  for (const auto& [width, n] : widths) w[std::to_string(width)] = n;
  doc["widths"] = w;
  doc["with_losses"] = with_losses;
  doc["without_special_brackets"] = unbracketed;
  emit_json(o.report, doc, ctx.out);
  return kExitOk;
}

template <typename Options, typename Fn>
std::shared_ptr<Options> bind(CLI::App* sub, Action& selected, Fn fn) {
  auto opts = std::make_shared<Options>();
  sub->callback([opts, &selected, fn] { selected = [opts, fn](const Context& c) { return fn(*opts, c); }; });
  return opts;
}

}  // namespace

void register_pipeline_commands(CLI::App& app, Action& selected) {
  {
    auto* sub = app.add_subcommand("ingest", "Parse gzipped PubMed XML archives into the store");
    auto o = bind<IngestOptions>(sub, selected, run_ingest);
    sub->add_option("--archive", o->archives, "Archive (.xml.gz); repeatable")->required()->check(CLI::ExistingFile);
    sub->add_option("--store", o->store, "Store directory (created if missing)")->required();
    sub->add_option("--report", o->report, "Report path, '-' for stdout");
  }
  {
    auto* sub = app.add_subcommand("prep", "Write normalized pmid<TAB>text lines for encoding");
    auto o = bind<PrepOptions>(sub, selected, run_prep);
    sub->add_option("--store", o->store, "Store directory")->required();
    sub->add_option("--out", o->out, "Output TSV")->required();
    sub->add_option("--labels", o->labels, "Comma-separated journals to keep (default: all)");
  }
  {
    auto* sub = app.add_subcommand("pool", "Pool activations or static word vectors into a store space");
    auto o = bind<PoolOptions>(sub, selected, run_pool);
    sub->add_option("--store", o->store, "Store directory")->required();
    sub->add_option("--space", o->space, "Target space id")->required();
    sub->add_option("--strategy", o->strategy,
                    "mean_tokens | cls | mean_long_tokens | cls_concat_mean | mean_words | static_mean")
        ->required();
    sub->add_option("--in", o->container, "Activation container (TACS)")->check(CLI::ExistingFile);
    sub->add_option("--texts", o->texts, "pmid<TAB>text file for static_mean")->check(CLI::ExistingFile);
    sub->add_option("--vectors", o->vectors, "Word-vector text file for static_mean")->check(CLI::ExistingFile);
    sub->add_option("--min-chars", o->min_chars, "Long-token threshold in characters");
    sub->add_option("--marker", o->marker, "Subword continuation marker");
    sub->add_option("--report", o->report, "Report path, '-' for stdout");
  }
  {
    auto* sub = app.add_subcommand("fit-space", "Demean and fit a PCA space, storing the projected vectors");
    auto o = bind<FitOptions>(sub, selected, run_fit_space);
    sub->add_option("--store", o->store, "Store directory")->required();
    sub->add_option("--space", o->space, "Input space id")->required();
    sub->add_option("--out-space", o->out_space, "Id of the projected space")->required();
    sub->add_option("--dims", o->dims, "Output dimension")->check(CLI::PositiveNumber);
    sub->add_option("--sample", o->sample, "Rows sampled for the mean and the PCA fit")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o->seed, "Sampling seed");
    sub->add_option("--anisotropy-pairs", o->anisotropy_pairs, "Pairs drawn for the anisotropy diagnostic")
        ->check(CLI::PositiveNumber);
    sub->add_option("--report", o->report, "Report path, '-' for stdout");
  }
  {
    auto* sub = app.add_subcommand("validate-container", "Check an activation container document by document");
    auto o = bind<ValidateOptions>(sub, selected, run_validate);
    sub->add_option("--in", o->container, "Container file")->required()->check(CLI::ExistingFile);
    sub->add_option("--report", o->report, "Report path, '-' for stdout");
  }
}

}  // namespace sciembed::cli
