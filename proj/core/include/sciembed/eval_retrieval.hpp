#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sciembed/matrix.hpp"

namespace sciembed {

// Embeddings with one class label (journal) per row.
class LabeledPool {
 public:
  LabeledPool(Matrix embeddings, std::vector<std::string> labels, std::vector<std::uint64_t> pmids = {});

  std::size_t size() const noexcept { return embeddings_.rows(); }
  const Matrix& embeddings() const noexcept { return embeddings_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<std::uint64_t>& pmids() const noexcept { return pmids_; }

  // Dense label ids, in order of first appearance.
  std::size_t label_id(std::size_t row) const noexcept { return label_ids_[row]; }
  std::size_t label_count(std::size_t row) const noexcept { return counts_[label_ids_[row]]; }
  std::size_t distinct_labels() const noexcept { return counts_.size(); }

 private:
  Matrix embeddings_;
  std::vector<std::string> labels_;
  std::vector<std::uint64_t> pmids_;
  std::vector<std::size_t> label_ids_;
  std::vector<std::size_t> counts_;
};

// Fraction of the k nearest neighbours (query excluded) sharing the query's label.
double precision_at_k(const LabeledPool& pool, std::size_t query_index, std::size_t k);

// precision_at_k with k = R = (rows with the query's label) - 1.
double precision_at_R(const LabeledPool& pool, std::size_t query_index);

// Average precision over the top R ranks, normalised by the number of hits
// within those R ranks (0 when there are none).
double map_at_R(const LabeledPool& pool, std::size_t query_index);

struct QueryScores {
  double precision_at_k = 0.0;
  double precision_at_r = 0.0;
  double map_at_r = 0.0;
};

// All three metrics from a single neighbour ranking.
QueryScores score_query(const LabeledPool& pool, std::size_t query_index, std::size_t k);

struct LabelSummary {
  std::size_t queries = 0;
  double precision_at_k = 0.0;
  double precision_at_r = 0.0;
  double map_at_r = 0.0;
};

struct RetrievalReport {
  std::string identifier;
  std::size_t n_queries = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  double precision_at_k = 0.0;
  double precision_at_r = 0.0;
  double map_at_r = 0.0;
  std::map<std::string, LabelSummary> per_label;

  nlohmann::ordered_json to_json() const;
};

struct BenchmarkOptions {
  std::string identifier;
  std::size_t n_queries = 5000;
  std::size_t k = 500;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

// Samples n_queries rows without replacement (seeded) and averages the three
// metrics. The result does not depend on the thread count.
RetrievalReport run_benchmark(const LabeledPool& pool, const BenchmarkOptions& options);

// Plain-text table with one row per report, columns Precision@k, Precision@R, MAP@R.
std::string render_table(std::span<const RetrievalReport> reports);

// Pairwise (cascade) summation; the result depends only on the order of `values`.
double pairwise_sum(std::span<const double> values) noexcept;

}  // namespace sciembed
