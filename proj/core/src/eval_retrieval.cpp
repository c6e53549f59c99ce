#include "sciembed/eval_retrieval.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <thread>
#include <unordered_map>

#include "sciembed/error.hpp"
#include "sciembed/geometry.hpp"

namespace sciembed {

namespace {

std::size_t relevant_r(const LabeledPool& pool, std::size_t q) {
  const auto r = pool.label_count(q) - 1;
  if (r == 0) throw ContractError("label '" + pool.labels()[q] + "' has a single member; R is undefined");
  return r;
}

void check_query(const LabeledPool& pool, std::size_t q) {
  if (q >= pool.size()) throw ContractError("query index out of range");
}

// Precision over the first k entries of a ranking.
double precision_of(const LabeledPool& pool, std::size_t q, std::span<const std::size_t> ranking, std::size_t k) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) hits += pool.label_id(ranking[i]) == pool.label_id(q);
  return static_cast<double>(hits) / static_cast<double>(k);
}

double average_precision_of(const LabeledPool& pool, std::size_t q, std::span<const std::size_t> ranking,
                            std::size_t r) {
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    if (pool.label_id(ranking[i]) == pool.label_id(q)) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace

LabeledPool::LabeledPool(Matrix embeddings, std::vector<std::string> labels, std::vector<std::uint64_t> pmids)
    : embeddings_(std::move(embeddings)), labels_(std::move(labels)), pmids_(std::move(pmids)) {
  if (labels_.size() != embeddings_.rows()) {
    throw DimensionError("labels vs embedding rows", embeddings_.rows(), labels_.size());
  }
  if (!pmids_.empty() && pmids_.size() != embeddings_.rows()) {
    throw DimensionError("pmids vs embedding rows", embeddings_.rows(), pmids_.size());
  }
  std::unordered_map<std::string, std::size_t> ids;
  label_ids_.reserve(labels_.size());
  for (const auto& l : labels_) {
    auto [it, inserted] = ids.emplace(l, counts_.size());
    if (inserted) counts_.push_back(0);
    ++counts_[it->second];
    label_ids_.push_back(it->second);
  }
}

double precision_at_k(const LabeledPool& pool, std::size_t query_index, std::size_t k) {
  check_query(pool, query_index);
  const auto ranking = knn(query_index, pool.embeddings(), k);
  return precision_of(pool, query_index, ranking, k);
}

double precision_at_R(const LabeledPool& pool, std::size_t query_index) {
  check_query(pool, query_index);
  return precision_at_k(pool, query_index, relevant_r(pool, query_index));
}

double map_at_R(const LabeledPool& pool, std::size_t query_index) {
  check_query(pool, query_index);
  const auto r = relevant_r(pool, query_index);
  const auto ranking = knn(query_index, pool.embeddings(), r);
  return average_precision_of(pool, query_index, ranking, r);
}

QueryScores score_query(const LabeledPool& pool, std::size_t query_index, std::size_t k) {
  check_query(pool, query_index);
  const auto r = relevant_r(pool, query_index);
  const auto ranking = knn(query_index, pool.embeddings(), std::max(k, r));
  QueryScores s;
  s.precision_at_k = precision_of(pool, query_index, ranking, k);
  s.precision_at_r = precision_of(pool, query_index, ranking, r);
  s.map_at_r = average_precision_of(pool, query_index, ranking, r);
  return s;
}

double pairwise_sum(std::span<const double> values) noexcept {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const auto half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

RetrievalReport run_benchmark(const LabeledPool& pool, const BenchmarkOptions& options) {
  if (options.n_queries == 0) throw ContractError("run_benchmark: n_queries must be positive");
  if (options.n_queries > pool.size()) {
    throw ContractError("run_benchmark: n_queries " + std::to_string(options.n_queries) + " exceeds pool size " +
                        std::to_string(pool.size()));
  }
  if (options.k < 1 || options.k + 1 > pool.size()) {
    throw RankError("run_benchmark: k=" + std::to_string(options.k) + " needs a pool larger than " +
                    std::to_string(pool.size()));
  }
  const auto queries = sample_indices(pool.size(), options.n_queries, options.seed);
  for (auto q : queries) relevant_r(pool, q);  // fail fast on singleton labels

  std::vector<QueryScores> scores(queries.size());
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(queries.size())));
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) scores[i] = score_query(pool, queries[i], options.k);
  };
  if (threads == 1) {
    work(0, queries.size());
  } else {
    std::vector<std::jthread> pool_threads;
    const std::size_t chunk = (queries.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk;
      const std::size_t e = std::min(queries.size(), b + chunk);
      if (b < e) pool_threads.emplace_back(work, b, e);
    }
  }

  RetrievalReport report;
  report.identifier = options.identifier;
  report.n_queries = queries.size();
  report.k = options.k;
  report.seed = options.seed;

  auto mean_of = [](const std::vector<double>& v) {
    return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
  };
  std::vector<double> pk, pr, mr;
  std::map<std::string, std::array<std::vector<double>, 3>> by_label;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    pk.push_back(scores[i].precision_at_k);
    pr.push_back(scores[i].precision_at_r);
    mr.push_back(scores[i].map_at_r);
    auto& slot = by_label[pool.labels()[queries[i]]];
    slot[0].push_back(scores[i].precision_at_k);
    slot[1].push_back(scores[i].precision_at_r);
    slot[2].push_back(scores[i].map_at_r);
  }
  report.precision_at_k = mean_of(pk);
  report.precision_at_r = mean_of(pr);
  report.map_at_r = mean_of(mr);
  for (const auto& [label, v] : by_label) {
    report.per_label[label] = LabelSummary{v[0].size(), mean_of(v[0]), mean_of(v[1]), mean_of(v[2])};
  }
  return report;
}

nlohmann::ordered_json RetrievalReport::to_json() const {
  nlohmann::ordered_json j;
  j["identifier"] = identifier;
  j["n_queries"] = n_queries;
  j["k"] = k;
  j["seed"] = seed;
  j["precision_at_k"] = precision_at_k;
  j["precision_at_r"] = precision_at_r;
  j["map_at_r"] = map_at_r;
  auto& labels = j["per_label"] = nlohmann::ordered_json::object();
  for (const auto& [label, s] : per_label) {
    labels[label] = {{"queries", s.queries},
                     {"precision_at_k", s.precision_at_k},
                     {"precision_at_r", s.precision_at_r},
                     {"map_at_r", s.map_at_r}};
  }
  return j;
}

std::string render_table(std::span<const RetrievalReport> reports) {
  std::size_t name_width = 0;
  for (const auto& r : reports) name_width = std::max(name_width, r.identifier.size());
  const std::string pk_header =
      "Precision@" + (reports.empty() ? std::string("k") : std::to_string(reports.front().k));
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  const std::size_t col = std::max<std::size_t>(pk_header.size(), 11) + 2;
  std::string out = pad("", name_width + 2) + pad(pk_header, col) + pad("Precision@R", col) + "MAP@R\n";
  for (const auto& r : reports) {
    out += pad(r.identifier, name_width + 2) + pad(format_fixed(r.precision_at_k, 2), col) +
           pad(format_fixed(r.precision_at_r, 2), col) + format_fixed(r.map_at_r, 2) + "\n";
  }
  return out;
}

}  // namespace sciembed
