// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mask_table.hpp"
#include "oracles.hpp"
#include "sciembed/corpus_store.hpp"
#include "sciembed/eval_retrieval.hpp"
#include "sciembed/geometry.hpp"
#include "sciembed/half.hpp"
#include "sciembed/metrics.hpp"
#include "sciembed/pooling.hpp"
#include "sciembed/pubmed_ingest.hpp"
#include "sciembed/text_prep.hpp"
#include "test_support.hpp"
#ifdef SCIEMBED_HAVE_CLI
#include "cli_harness.hpp"
#endif

using namespace sciembed;

namespace {

// Pinned tolerances.
constexpr double kRetrievalTol = 0.0;          // criterion 1: exact
constexpr double kRetrievalSeconds = 10.0;
constexpr double kSeparationSeconds = 30.0;
constexpr double kChanceTol = 0.05;
constexpr double kPoolingTol = 1e-6;           // per coordinate
constexpr double kStaticNormSlack = 1e-6;      // float32 rounding of a unit-norm mean
constexpr double kOrthoTol = 1e-6;
constexpr double kVarianceRelTol = 1e-6;
constexpr double kDemeanRatio = 1e-6;
constexpr double kPerplexityTol = 1e-15;       // exp(ln 2) may land one ulp off 2
constexpr double kBreadthBoundSlack = 1e-12;   // relative

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

LabeledPool line_pool(const std::string& query_label, const std::vector<std::string>& ranked) {
  Matrix m(ranked.size() + 1, 1);
  std::vector<std::string> labels{query_label};
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    m(i + 1, 0) = static_cast<float>(i + 1);
    labels.push_back(ranked[i]);
  }
  return LabeledPool(std::move(m), std::move(labels));
}

// ---- 1 -------------------------------------------------------------------

Outcome retrieval_oracle() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  std::size_t compared = 0;
  for (int p = 0; p < 50 && o.pass; ++p) {
    const auto n = testing::uniform_index(rng, 20, 500);
    const auto d = testing::uniform_index(rng, 1, 20);
    const auto n_labels = testing::uniform_index(rng, 2, 5);
    // Coarse grid coordinates make exact distance ties common.
    auto x = testing::random_matrix(rng, n, d);
    if (p % 5 == 0) {
      for (auto& v : x.data()) v = std::round(v);
    }
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i < 2 * n_labels ? i / 2 : rng() % n_labels);
    std::vector<std::string> names;
    for (int l : labels) names.push_back("L" + std::to_string(l));
    const LabeledPool pool(x, names);
    for (std::size_t q = 0; q < n && o.pass; ++q) {
      const auto ranking = oracle::full_ranking(x, q);
      const auto k = testing::uniform_index(rng, 1, n - 1);
      const double pk = precision_at_k(pool, q, k);
      const double pr = precision_at_R(pool, q);
      const double ap = map_at_R(pool, q);
      const double want_pk = oracle::precision_at_k(ranking, labels, q, k);
      const double want_pr = oracle::precision_at_k(ranking, labels, q, oracle::r_of(labels, q));
      const double want_ap = oracle::map_at_r(ranking, labels, q);
      const std::string where = "pool " + std::to_string(p) + " query " + std::to_string(q);
      o.require(std::abs(pk - want_pk) <= kRetrievalTol, where + " precision@k " + fmt(pk) + " vs " + fmt(want_pk));
      o.require(std::abs(pr - want_pr) <= kRetrievalTol, where + " precision@R " + fmt(pr) + " vs " + fmt(want_pr));
      o.require(std::abs(ap - want_ap) <= kRetrievalTol, where + " MAP@R " + fmt(ap) + " vs " + fmt(want_ap));
      ++compared;
    }
  }
  const double secs = seconds_since(t0);
  o.require(secs < kRetrievalSeconds, "runtime " + fmt(secs) + " s");
  if (o.pass) o.detail = std::to_string(compared) + " queries over 50 pools, " + fmt(secs) + " s";
  return o;
}

// ---- 2 -------------------------------------------------------------------

Outcome map_exceeds_precision() {
  Outcome o;
  // Query A; candidates ranked A,B,A,A,B; R = 3.
  // Top 3 holds A,B,A: P@R = 2/3. Hits at ranks 1 and 3: AP = (1/1 + 2/3) / 2 = 5/6.
  const auto pool = line_pool("A", {"A", "B", "A", "A", "B"});
  const double pr = precision_at_R(pool, 0);
  const double ap = map_at_R(pool, 0);
  o.require(pr == 2.0 / 3.0, "P@R " + fmt(pr) + ", expected 2/3");
  o.require(ap == (1.0 + 2.0 / 3.0) / 2.0, "MAP@R " + fmt(ap) + ", expected 5/6");
  o.require(ap > pr, "MAP@R does not exceed P@R");
  if (o.pass) o.detail = "P@R = " + fmt(pr) + ", MAP@R = " + fmt(ap);
  return o;
}

// ---- 3 -------------------------------------------------------------------

Outcome separation() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20);
  // Unit within-cluster deviation, centres 20 apart.
  Matrix x = testing::random_matrix(rng, 1000, 100);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < 1000; ++i) {
    if (i >= 500) x(i, 0) += 20.0f;
    labels.push_back(i < 500 ? "A" : "B");
  }
  BenchmarkOptions opt;
  opt.n_queries = 1000;
  opt.k = 500;
  const auto sep = run_benchmark(LabeledPool(x, labels), opt);

  Matrix same = testing::random_matrix(rng, 2000, 100);
  std::vector<std::string> mixed;
  for (std::size_t i = 0; i < 2000; ++i) mixed.push_back(i % 2 ? "A" : "B");
  BenchmarkOptions null_opt;
  null_opt.n_queries = 1000;
  null_opt.k = 500;
  null_opt.seed = 5;
  const auto chance = run_benchmark(LabeledPool(std::move(same), mixed), null_opt);
  const double secs = seconds_since(t0);

  o.require(sep.precision_at_k == 1.0, "P@500 = " + fmt(sep.precision_at_k) +
                                           " (each cluster has 499 same-label neighbours once the query is excluded)");
  o.require(sep.precision_at_r == 1.0, "P@R = " + fmt(sep.precision_at_r));
  o.require(sep.map_at_r == 1.0, "MAP@R = " + fmt(sep.map_at_r));
  o.require(std::abs(chance.precision_at_k - 0.5) <= kChanceTol, "null P@500 = " + fmt(chance.precision_at_k));
  o.require(secs < kSeparationSeconds, "runtime " + fmt(secs) + " s");
  if (o.pass) {
    o.detail = "separated 1.0/1.0/1.0, null " + fmt(chance.precision_at_k) + ", " + fmt(secs) + " s";
  } else {
    o.detail += "; P@R = " + fmt(sep.precision_at_r) + ", MAP@R = " + fmt(sep.map_at_r) + ", null P@500 = " +
                fmt(chance.precision_at_k);
  }
  return o;
}

// ---- 4 -------------------------------------------------------------------

double max_gap(const std::vector<float>& got, const std::vector<double>& want) {
  if (got.size() != want.size()) return INFINITY;
  double g = 0.0;
  for (std::size_t j = 0; j < got.size(); ++j) g = std::max(g, std::abs(got[j] - want[j]));
  return g;
}

Outcome pooling() {
  Outcome o;
  std::mt19937_64 rng(4004);
  double worst = 0.0, worst_norm = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = testing::random_activation(rng, trial + 1, testing::uniform_index(rng, 1, 40),
                                              testing::uniform_index(rng, 1, 64));
    const auto regular = oracle::mean_of_rows(m, oracle::regular_indices(m));
    std::vector<double> cls(m.rows.row(0).begin(), m.rows.row(0).end());
    std::vector<double> concat = cls;
    concat.insert(concat.end(), regular.begin(), regular.end());
    bool fell_back = false;
    const auto long_tokens = oracle::mean_long(m, kDefaultLongTokenChars, fell_back);

    const std::map<PoolingStrategy, std::vector<double>> want{
        {PoolingStrategy::kMeanTokens, regular},         {PoolingStrategy::kCls, cls},
        {PoolingStrategy::kMeanLongTokens, long_tokens}, {PoolingStrategy::kClsConcatMean, concat},
        {PoolingStrategy::kMeanWords, oracle::mean_words(m)}};
    for (const auto& [strategy, expected] : want) {
      const double gap = max_gap(pool(m, strategy).values, expected);
      worst = std::max(worst, gap);
      o.require(gap <= kPoolingTol, std::string(to_string(strategy)) + " off by " + fmt(gap) + " on trial " +
                                        std::to_string(trial));
    }
    o.require(pool_long_tokens(m, 0).values == pool_mean_tokens(m).values,
              "pool_long_tokens(m, 0) differs from mean_tokens on trial " + std::to_string(trial));

    // Static pooling: the document's own tokens as a bag over a random table.
    WordVectorTable table(m.width());
    std::map<std::string, std::vector<float>> vocab;
    std::vector<std::vector<float>> in_vocab;
    std::set<std::string> oov;
    std::vector<std::string> bag;
    for (std::size_t i = 0; i < m.tokens.size(); ++i) {
      if (m.special_mask[i]) continue;
      const auto& w = m.tokens[i];
      if (!vocab.count(w) && !oov.count(w) && rng() % 4 == 0) oov.insert(w);
      if (!vocab.count(w) && !oov.count(w)) {
        const auto v = testing::random_matrix(rng, 1, m.width(), 0.0, 1.0 + trial % 7);
        vocab[w].assign(v.row(0).begin(), v.row(0).end());
        table.insert(w, vocab[w]);
      }
      bag.push_back(w);
      if (vocab.count(w)) in_vocab.push_back(vocab[w]);
    }
    if (in_vocab.empty()) continue;
    const auto st = pool_static_mean(bag, table).values;
    const double gap = max_gap(st, oracle::static_mean(in_vocab));
    worst = std::max(worst, gap);
    o.require(gap <= kPoolingTol, "static_mean off by " + fmt(gap) + " on trial " + std::to_string(trial));
    double n2 = 0.0;
    for (float v : st) n2 += static_cast<double>(v) * v;
    worst_norm = std::max(worst_norm, std::sqrt(n2));
  }
  // Extra static bags, including a single word and many repeats of one word.
  WordVectorTable t(8);
  std::vector<std::string> words;
  for (int w = 0; w < 40; ++w) {
    const auto v = testing::random_matrix(rng, 1, 8, 0.0, 0.01 + w);
    words.push_back("w" + std::to_string(w));
    t.insert(words.back(), std::vector<float>(v.row(0).begin(), v.row(0).end()));
  }
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<std::string> bag;
    const auto n = testing::uniform_index(rng, 1, 30);
    for (std::size_t i = 0; i < n; ++i) bag.push_back(words[trial % 3 == 0 ? 0 : rng() % words.size()]);
    double n2 = 0.0;
    for (float v : pool_static_mean(bag, t).values) n2 += static_cast<double>(v) * v;
    worst_norm = std::max(worst_norm, std::sqrt(n2));
  }
  o.require(worst_norm <= 1.0 + kStaticNormSlack, "static norm " + fmt(worst_norm));
  if (o.pass) o.detail = "max coordinate error " + fmt(worst) + ", max static norm " + fmt(worst_norm);
  return o;
}

// ---- 5 -------------------------------------------------------------------

std::vector<double> column_variances(const Matrix& m) {
  std::vector<double> mu(m.cols(), 0.0), out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) mu[j] += m(i, j);
  }
  for (auto& v : mu) v /= static_cast<double>(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += (m(i, j) - mu[j]) * (m(i, j) - mu[j]);
  }
  for (auto& v : out) v /= static_cast<double>(m.rows() - 1);
  return out;
}

double mean_norm(const Matrix& m) {
  double s = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    long double c = 0.0L;
    for (std::size_t i = 0; i < m.rows(); ++i) c += m(i, j);
    c /= static_cast<long double>(m.rows());
    s += static_cast<double>(c * c);
  }
  return std::sqrt(s);
}

Outcome geometry() {
  Outcome o;
  std::mt19937_64 rng(5005);
  double worst_ortho = 0.0, worst_var = 0.0, worst_demean = 0.0;
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t d = 16 + 8 * trial;
    const std::size_t d_out = std::min<std::size_t>(d, 10);
    // Common offset (the anisotropy the demeaning removes) and distinct column scales.
    auto x = testing::random_matrix(rng, 800, d, 2.5 + trial);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < d; ++j) x(i, j) = static_cast<float>((x(i, j) - 2.5 - trial) * (1.0 + 0.5 * j) + 2.5 + trial);
    }
    const auto s = fit_space(x, d_out);
    for (std::size_t a = 0; a < s.basis.rows(); ++a) {
      for (std::size_t b = a; b < s.basis.rows(); ++b) {
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += static_cast<double>(s.basis(a, j)) * s.basis(b, j);
        worst_ortho = std::max(worst_ortho, std::abs(dot - (a == b ? 1.0 : 0.0)));
      }
    }
    for (std::size_t k = 1; k < s.explained_variance.size(); ++k) {
      o.require(s.explained_variance[k] <= s.explained_variance[k - 1], "explained variance increases at " +
                                                                            std::to_string(k));
    }
    const auto var = column_variances(apply_pca(s, x));
    for (std::size_t k = 0; k < d_out; ++k) {
      worst_var = std::max(worst_var, std::abs(var[k] - s.explained_variance[k]) / s.explained_variance[k]);
    }
    const double before = mean_norm(x);
    const double after = mean_norm(demean(x, estimate_mean(x)));
    worst_demean = std::max(worst_demean, after / before);
  }
  o.require(worst_ortho <= kOrthoTol, "basis orthonormality error " + fmt(worst_ortho));
  o.require(worst_var <= kVarianceRelTol, "variance reproduction error " + fmt(worst_var));
  o.require(worst_demean < kDemeanRatio, "demeaned mean norm ratio " + fmt(worst_demean));

  Matrix same(64, 5);
  for (std::size_t i = 0; i < same.rows(); ++i) {
    for (std::size_t j = 0; j < 5; ++j) same(i, j) = 0.3f * static_cast<float>(j) - 0.7f;
  }
  const double a = anisotropy(same, 2000, 1).mean_cosine;
  o.require(a == 1.0, "anisotropy of identical rows " + fmt(a));
  if (o.pass) {
    o.detail = "orthonormality " + fmt(worst_ortho) + ", variance " + fmt(worst_var) + ", demean ratio " +
               fmt(worst_demean);
  }
  return o;
}

// ---- 6 -------------------------------------------------------------------

Outcome closed_forms() {
  Outcome o;
  const ElementSet pm{"pm", Matrix{{1, 0}, {-1, 0}}, {}};
  o.require(breadth_sigma(pm) == 1.0, "breadth_sigma " + fmt(breadth_sigma(pm)));
  o.require(breadth_pairwise(pm) == 2.0, "breadth_pairwise " + fmt(breadth_pairwise(pm)));
  const ElementSet a{"a", Matrix{{0, 0}}, {}};
  const ElementSet b{"b", Matrix{{3, 4}}, {}};
  o.require(set_distance(a, b) == 5.0, "set_distance " + fmt(set_distance(a, b)));
  const double ppl = perplexity(std::vector<double>(7, std::log(2.0)));
  o.require(std::abs(ppl - 2.0) <= kPerplexityTol, "perplexity " + fmt(ppl));

  std::mt19937_64 rng(6006);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  std::size_t out_of_range = 0;
  for (int i = 0; i < 100000; ++i) {
    const auto d = testing::uniform_index(rng, 1, 12);
    const auto pos = testing::random_matrix(rng, testing::uniform_index(rng, 1, 3), d, 0.0, scale(rng));
    const auto neg = testing::random_matrix(rng, testing::uniform_index(rng, 1, 3), d, 0.0, scale(rng));
    const ElementSet p{"p", pos, {}}, n{"n", neg, {}};
    const auto axis = build_axis(std::span(&p, 1), std::span(&n, 1));
    const auto doc = testing::random_matrix(rng, 1, d, 0.0, scale(rng));
    const double v = project_on_axis(doc.row(0), axis);
    out_of_range += !(v >= -1.0 && v <= 1.0);
  }
  o.require(out_of_range == 0, std::to_string(out_of_range) + " axis projections outside [-1, 1]");

  std::size_t violations = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto n = testing::uniform_index(rng, 2, 12);
    const auto d = testing::uniform_index(rng, 1, 8);
    const ElementSet s{"s", testing::random_matrix(rng, n, d, 0.0, scale(rng)), {}};
    const double sigma = breadth_sigma(s), pairwise = breadth_pairwise(s);
    const double slack = kBreadthBoundSlack * pairwise;
    violations += !(sigma <= pairwise + slack && pairwise <= 2.0 * sigma + slack);
  }
  o.require(violations == 0, std::to_string(violations) + " sets violate sigma <= pairwise <= 2 sigma");
  if (o.pass) o.detail = "perplexity " + fmt(ppl) + ", 1e5 axis projections, 1e4 breadth sets";
  return o;
}

// ---- 7 -------------------------------------------------------------------

Outcome ingest_store() {
  Outcome o;
  std::ifstream gz(testing::fixture("pubmed_fixture.xml.gz"), std::ios::binary);
  const auto parsed = parse_archive(gz);
  std::ifstream mf(testing::fixture("pubmed_fixture.manifest.json"));
  const auto manifest = nlohmann::ordered_json::parse(mf);
  const auto& expected = manifest["records"];
  o.require(parsed.records.size() == expected.size(), "record count " + std::to_string(parsed.records.size()));
  for (std::size_t i = 0; i < std::min(parsed.records.size(), expected.size()); ++i) {
    const auto got = record_to_json(parsed.records[i]).dump();
    o.require(got == expected[i].dump(), "record " + std::to_string(i) + ": " + got);
  }
  o.require(parsed.stats.citations == manifest["citations"].get<std::size_t>(), "citation count");
  o.require(parsed.stats.skipped == manifest["skipped"].get<std::size_t>(), "skipped count");

  testing::TempDir dir("sciembed-acceptance");
  auto store = CorpusStore::open(dir.path());
  store.put_records(parsed.records);
  {
    std::ifstream lines(dir / "records.jsonl");
    std::size_t i = 0;
    for (std::string line; std::getline(lines, line); ++i) {
      o.require(i < expected.size() && line == expected[i].dump(), "records.jsonl line " + std::to_string(i));
    }
    o.require(i == expected.size(), "records.jsonl has " + std::to_string(i) + " lines");
  }
  RecordQuery with_abstract;
  with_abstract.require_abstract = true;
  std::set<std::uint64_t> kept, all;
  for (const auto& r : store.query(with_abstract)) kept.insert(r.pmid);
  for (const auto& r : store.query()) all.insert(r.pmid);
  std::set<std::uint64_t> dropped;
  std::set_difference(all.begin(), all.end(), kept.begin(), kept.end(), std::inserter(dropped, dropped.end()));
  const auto abstract_less = manifest["abstract_less"].get<std::set<std::uint64_t>>();
  o.require(dropped == abstract_less, "require_abstract dropped " + std::to_string(dropped.size()) + " records");

  std::mt19937_64 rng(7007);
  store.register_space("s", 384);
  std::size_t changed = 0;
  for (std::uint64_t pmid = 1; pmid <= 200; ++pmid) {
    const auto m = testing::random_matrix(rng, 1, 384, 0.0, pmid % 2 ? 1e-3 : 300.0);
    store.put_embedding({pmid, "s", std::vector<float>(m.row(0).begin(), m.row(0).end())});
  }
  std::vector<std::uint64_t> ids(200);
  std::iota(ids.begin(), ids.end(), 1);
  const auto once = store.get_embeddings("s", ids);
  for (std::size_t i = 0; i < ids.size(); ++i) store.put_embedding({ids[i], "s", *once[i]});
  const auto twice = store.get_embeddings("s", ids);
  for (std::size_t i = 0; i < ids.size(); ++i) changed += *once[i] != *twice[i];
  o.require(changed == 0, std::to_string(changed) + " vectors moved on a second quantization");
  if (o.pass) o.detail = "10 records byte-exact, dropped " + std::to_string(dropped.size()) + ", 200 vectors fixed";
  return o;
}

// ---- 8 -------------------------------------------------------------------

Outcome text_prep() {
  Outcome o;
  std::size_t table_misses = 0;
  for (const auto& c : testing::kMaskTable) {
    const auto got = mask_numbers(c.in);
    if (got != c.out) {
      if (table_misses++ == 0) o.require(false, std::string("mask(\"") + c.in + "\") = \"" + got + "\"");
    }
  }
  o.require(table_misses == 0, "");

  static const char* atoms[] = {"A", "b", "Z", "0", "9", "5.5", " ", "\t", "\n", "(", ")", "%", "-", "<",
                                ">", ".", ",", "É", "ß", "Ω", "Ж", "µ", "²", "١", "e", "p=0.", "N", "IL-",
                                "\r", "1", "\xff", "\xc3", "NUM", "<NUM>", "3e-4", "1,000"};
  auto random_text = [&](std::mt19937_64& rng) {
    std::string s;
    const auto n = testing::uniform_index(rng, 1, 40);
    for (std::size_t i = 0; i < n; ++i) s += atoms[testing::uniform_index(rng, 0, std::size(atoms) - 1)];
    return s;
  };
  std::mt19937_64 rng(8008);
  std::size_t with_digit = 0, not_idempotent = 0;
  for (int i = 0; i < 100000; ++i) {
    auto title = random_text(rng), abstract = random_text(rng);
    if (trim(title).empty()) title += "t";
    if (trim(abstract).empty()) abstract += "a";
    const auto out = normalize(title, abstract).text;
    with_digit += out.find_first_of("0123456789") != std::string::npos;
    const auto raw = random_text(rng);
    const auto masked = mask_numbers(raw);
    not_idempotent += mask_numbers(masked) != masked;
  }
  o.require(with_digit == 0, std::to_string(with_digit) + " normalized outputs contain a digit");
  o.require(not_idempotent == 0, std::to_string(not_idempotent) + " inputs where masking is not idempotent");
  if (o.pass) o.detail = std::to_string(std::size(testing::kMaskTable)) + " table cases, 1e5 fuzz inputs";
  return o;
}

// ---- 9 -------------------------------------------------------------------

#ifdef SCIEMBED_HAVE_CLI
// Full pipeline in `root`. Returns every JSON/TSV artifact by relative name.
std::map<std::string, std::string> pipeline(const std::filesystem::path& root, std::vector<std::string>& failures) {
  namespace fs = std::filesystem;
  fs::remove_all(root);
  fs::create_directories(root);
  const auto store = (root / "store").string();
  auto at = [&](const char* name) { return (root / name).string(); };
  auto run = [&](std::vector<std::string> args) {
    const auto r = testing::run_cli(args);
    if (r.code != 0) failures.push_back(args[0] + " exited " + std::to_string(r.code) + ": " + r.err);
    return r;
  };
  std::map<std::string, std::string> out;
  auto keep = [&](const std::string& name, const std::string& text) { out[name] = text; };

  run({"ingest", "--archive", testing::fixture("pubmed_fixture.xml.gz").string(), "--store", store, "--report",
       at("ingest.json")});
  run({"prep", "--store", store, "--out", at("texts.tsv")});
  testing::write_fake_container(root / "texts.tsv", root / "docs.tacs", 12, true);
  keep("validate.json", run({"validate-container", "--in", at("docs.tacs")}).out);
  run({"pool", "--store", store, "--space", "fake_mean", "--strategy", "mean_tokens", "--in", at("docs.tacs"),
       "--report", at("pool.json")});
  run({"pool", "--store", store, "--space", "fake_words", "--strategy", "mean_words", "--in", at("docs.tacs"),
       "--report", at("pool_words.json")});
  std::ofstream(root / "wv.txt") << "3 2\ncortex 3 4\nthe 0 2\n<NUM> 1 0\n";
  keep("pool_static.json", run({"pool", "--store", store, "--space", "static", "--strategy", "static_mean",
                                "--texts", at("texts.tsv"), "--vectors", at("wv.txt")})
                               .out);
  run({"fit-space", "--store", store, "--space", "fake_mean", "--out-space", "fake_pca", "--dims", "4", "--sample",
       "6", "--seed", "11", "--report", at("fit.json")});
  const std::string labels = "NeuroImage,Journal of Neurophysiology";
  run({"bench", "--store", store, "--space", "fake_pca", "--labels", labels, "--queries", "5", "--k", "2", "--seed",
       "3", "--out", at("bench.json")});
  run({"--threads", "3", "bench", "--store", store, "--space", "fake_words", "--labels", labels, "--queries", "5",
       "--k", "1", "--out", at("bench_words.json")});
  run({"metrics", "--metric", "breadth", "--store", store, "--space", "fake_pca", "--set", "ni=journal:NeuroImage",
       "--set", "all=all", "--out", at("breadth.json")});
  run({"metrics", "--metric", "novelty", "--store", store, "--space", "fake_pca", "--set", "ni=journal:NeuroImage",
       "--reference", "all=all", "--seed", "2", "--out", at("novelty.json")});
  run({"metrics", "--metric", "perplexity", "--in", at("docs.tacs"), "--out", at("perplexity.json")});
  run({"export-map", "--store", store, "--space", "fake_mean", "--out", at("map.tsv"), "--sample", "6", "--seed",
       "4"});
  run({"export-map", "--store", store, "--space", "fake_mean", "--method", "umap", "--bridge", SCIEMBED_FAKE_BRIDGE,
       "--out", at("umap.tsv"), "--seed", "4"});

  for (const auto& e : fs::recursive_directory_iterator(root)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".json" || ext == ".tsv" || ext == ".jsonl" || ext == ".emb")) {
      keep(fs::relative(e.path(), root).string(), testing::slurp(e.path()));
    }
  }
  return out;
}
#endif

Outcome reproducibility() {
  Outcome o;
#ifdef SCIEMBED_HAVE_CLI
  testing::TempDir dir("sciembed-repro");
  const auto root = dir / "run";
  std::vector<std::string> failures;
  const auto first = pipeline(root, failures);
  const auto second = pipeline(root, failures);
  o.require(failures.empty(), failures.empty() ? "" : failures.front());
  o.require(first.size() == second.size(), "artifact sets differ");
  std::size_t differing = 0;
  for (const auto& [name, bytes] : first) {
    const auto it = second.find(name);
    if (it == second.end() || it->second != bytes) {
      if (differing++ == 0) o.require(false, name + " differs between runs");
    }
  }
  if (o.pass) o.detail = std::to_string(first.size()) + " artifacts byte-identical across two runs";
#else
  o.require(false, "command-line tool not built");
#endif
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"retrieval metrics equal the full-sort oracle", retrieval_oracle},
      {"MAP@R exceeds precision@R on the constructed fixture", map_exceeds_precision},
      {"separated and identical Gaussian clusters", separation},
      {"pooling strategies against naive oracles", pooling},
      {"PCA and demeaning geometry", geometry},
      {"metric closed forms and bounds", closed_forms},
      {"ingest and store round trip", ingest_store},
      {"number masking and normalization", text_prep},
      {"pipeline reruns are byte-identical", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::cout << "criterion " << i + 1 << ": " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << "  ["
              << o.detail << "]" << std::endl;
  }
  std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
