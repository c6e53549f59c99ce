#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "sciembed/error.hpp"
#include "sciembed/eval_retrieval.hpp"
#include "test_support.hpp"

using namespace sciembed;

namespace {

// Query at x=0, candidate i at x=i, so the ranking is the listed order.
LabeledPool line_pool(const std::string& query_label, const std::vector<std::string>& ranked) {
  Matrix m(ranked.size() + 1, 1);
  std::vector<std::string> labels{query_label};
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    m(i + 1, 0) = static_cast<float>(i + 1);
    labels.push_back(ranked[i]);
  }
  return LabeledPool(std::move(m), std::move(labels));
}

// Two Gaussian clusters, labels "A" then "B", centres `separation` apart along
// the first axis, unit within-cluster deviation.
LabeledPool two_clusters(std::mt19937_64& rng, std::size_t per_cluster, std::size_t dim, double separation) {
  Matrix m = testing::random_matrix(rng, 2 * per_cluster, dim);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < 2 * per_cluster; ++i) {
    const bool b = i >= per_cluster;
    if (b) m(i, 0) += static_cast<float>(separation);
    labels.push_back(b ? "B" : "A");
  }
  return LabeledPool(std::move(m), std::move(labels));
}

}  // namespace

TEST_CASE("hand-enumerated fixtures") {
  const auto p = line_pool("A", {"A", "A", "B", "A"});
  CHECK(precision_at_k(p, 0, 4) == 0.75);

  // Query A plus candidates [A,A,A,B,B] ranked [A,B,A,A,B]; R = 3.
  const auto r = line_pool("A", {"A", "B", "A", "A", "B"});
  CHECK(precision_at_R(r, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  // Relevant at ranks 1 and 3 of the top 3: (1/1 + 2/3) / 2.
  CHECK(map_at_R(r, 0) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(map_at_R(r, 0) > precision_at_R(r, 0));

  // Relevant at ranks 1 and 3 within R = 4.
  const auto m = line_pool("A", {"A", "B", "A", "B", "B", "A", "A"});
  CHECK(map_at_R(m, 0) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));

  const auto none = line_pool("A", {"B", "B", "A", "A"});
  CHECK(map_at_R(none, 0) == 0.0);
  const auto all = line_pool("A", {"A", "A", "B"});
  CHECK(map_at_R(all, 0) == 1.0);
  CHECK(precision_at_R(all, 0) == 1.0);

  const auto single = line_pool("A", {"A", "A"});
  CHECK(precision_at_k(single, 0, 2) == 1.0);
  CHECK(precision_at_R(single, 0) == 1.0);

  CHECK_THROWS_AS(precision_at_k(p, 0, 5), RankError);
  CHECK_THROWS_AS(precision_at_k(p, 0, 0), RankError);
  CHECK_THROWS_AS(precision_at_R(line_pool("C", {"A"}), 0), ContractError);
  CHECK_THROWS_AS(LabeledPool(Matrix(2, 1), {"A"}), DimensionError);

  const auto s = score_query(r, 0, 4);
  CHECK(s.precision_at_k == 0.75);
  CHECK(s.precision_at_r == precision_at_R(r, 0));
  CHECK(s.map_at_r == map_at_R(r, 0));
}

TEST_CASE("metrics equal the full-sort oracle on small pools") {
  std::mt19937_64 rng(100);
  for (int trial = 0; trial < 4; ++trial) {
    const std::size_t n = trial == 0 ? 100 : 500;
    const auto x = testing::random_matrix(rng, n, 5);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back(std::string(1, static_cast<char>('A' + rng() % 3)));
    const LabeledPool pool(x, labels);
    for (std::size_t q = 0; q < n; q += (n == 100 ? 1 : 7)) {
      const auto ranking = oracle::full_ranking(x, q);
      CHECK(precision_at_k(pool, q, 10) == oracle::precision_at_k(ranking, labels, q, 10));
      CHECK(precision_at_R(pool, q) == oracle::precision_at_k(ranking, labels, q, oracle::r_of(labels, q)));
      CHECK(map_at_R(pool, q) == oracle::map_at_r(ranking, labels, q));
    }
  }
}

TEST_CASE("flipping the label of a non-neighbour leaves precision@k alone") {
  std::mt19937_64 rng(12);
  const auto x = testing::random_matrix(rng, 120, 4);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < 120; ++i) labels.push_back(i % 2 ? "A" : "B");
  const auto ranking = oracle::full_ranking(x, 0);
  const double before = precision_at_k(LabeledPool(x, labels), 0, 10);
  for (std::size_t r = 10; r < ranking.size(); r += 9) {
    auto flipped = labels;
    flipped[ranking[r]] = flipped[ranking[r]] == "A" ? "B" : "A";
    CHECK(precision_at_k(LabeledPool(x, flipped), 0, 10) == before);
  }
}

TEST_CASE("well separated clusters") {
  std::mt19937_64 rng(20);
  const auto pool = two_clusters(rng, 500, 100, 20.0);
  BenchmarkOptions opt;
  opt.n_queries = 1000;
  opt.k = 500;
  const auto report = run_benchmark(pool, opt);
  // Only 499 same-label rows exist once the query is excluded, so the 500th
  // neighbour is always from the other cluster.
  const auto ranking = oracle::full_ranking(pool.embeddings(), 0);
  CHECK(oracle::precision_at_k(ranking, pool.labels(), 0, 500) == 0.998);
  CHECK(report.precision_at_k == doctest::Approx(0.998).epsilon(1e-12));
  CHECK(report.precision_at_r == 1.0);
  CHECK(report.map_at_r == 1.0);
  opt.k = 499;
  CHECK(run_benchmark(pool, opt).precision_at_k == 1.0);
}

TEST_CASE("identical distributions give chance precision") {
  std::mt19937_64 rng(21);
  auto x = testing::random_matrix(rng, 2000, 100);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < 2000; ++i) labels.push_back(i % 2 ? "NeuroImage" : "J Neurophysiol");
  BenchmarkOptions opt;
  opt.n_queries = 1000;
  opt.seed = 5;
  const auto report = run_benchmark(LabeledPool(std::move(x), labels), opt);
  CHECK(std::abs(report.precision_at_k - 0.5) <= 0.05);
  CHECK(report.per_label.size() == 2);
  CHECK(report.per_label.at("NeuroImage").queries + report.per_label.at("J Neurophysiol").queries == 1000);
}

TEST_CASE("reports are deterministic and independent of threads") {
  std::mt19937_64 rng(22);
  const auto pool = two_clusters(rng, 300, 16, 1.0);
  BenchmarkOptions opt;
  opt.identifier = "synthetic";
  opt.n_queries = 400;
  opt.k = 50;
  opt.seed = 9;
  const auto a = run_benchmark(pool, opt).to_json().dump();
  CHECK(run_benchmark(pool, opt).to_json().dump() == a);
  for (unsigned t : {2u, 3u, 8u}) {
    opt.threads = t;
    CHECK(run_benchmark(pool, opt).to_json().dump() == a);
  }
  opt.seed = 10;
  CHECK(run_benchmark(pool, opt).to_json().dump() != a);

  opt.n_queries = 601;
  CHECK_THROWS_AS(run_benchmark(pool, opt), ContractError);
}

TEST_CASE("metrics are invariant under a signed permutation of coordinates") {
  std::mt19937_64 rng(23);
  const auto pool = two_clusters(rng, 100, 6, 1.5);
  Matrix y(pool.size(), 6);
  const std::size_t perm[] = {3, 0, 5, 1, 4, 2};
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = 0; j < 6; ++j) y(i, j) = (j % 2 ? -1.0f : 1.0f) * pool.embeddings()(i, perm[j]);
  }
  const LabeledPool rotated(y, pool.labels());
  for (std::size_t q = 0; q < pool.size(); ++q) {
    CHECK(precision_at_k(pool, q, 20) == precision_at_k(rotated, q, 20));
    CHECK(map_at_R(pool, q) == map_at_R(rotated, q));
  }
}

TEST_CASE("render_table and pairwise_sum") {
  RetrievalReport a;
  a.identifier = "scibert_mean";
  a.k = 500;
  a.precision_at_k = 0.912;
  a.precision_at_r = 0.6849;
  a.map_at_r = 0.8;
  const auto table = render_table(std::span(&a, 1));
  CHECK(table.find("Precision@500") != std::string::npos);
  CHECK(table.find("MAP@R") != std::string::npos);
  CHECK(table.find("scibert_mean  0.91") != std::string::npos);
  CHECK(table.find("0.68") != std::string::npos);
  CHECK(table.find("0.80") != std::string::npos);

  const std::vector<double> v{1e16, 1.0, -1e16, 1.0};
  CHECK(pairwise_sum(v) == pairwise_sum(v));
  const std::vector<double> ones(1000, 0.1);
  CHECK(pairwise_sum(ones) == doctest::Approx(100.0).epsilon(1e-13));
  CHECK(pairwise_sum(std::span<const double>{}) == 0.0);
}
