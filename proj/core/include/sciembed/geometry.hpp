#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sciembed/matrix.hpp"

namespace sciembed {

// A fitted linear map: out = basis * (in - mean).
struct SemanticSpace {
  std::string space_id;
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::uint64_t seed = 0;                // seed of the sample the space was fitted on
  std::vector<float> mean;               // input_dim
  Matrix basis;                          // output_dim x input_dim, orthonormal rows
  std::vector<double> explained_variance;  // output_dim, nonincreasing

  friend bool operator==(const SemanticSpace&, const SemanticSpace&) = default;
};

std::vector<float> estimate_mean(const Matrix& sample);

// Row-wise x - mean.
Matrix demean(const Matrix& vectors, std::span<const float> mean);

// Principal directions of the sample covariance (1/(N-1) normalisation),
// computed by eigendecomposition of the D x D covariance. The sample is
// re-centred; the residual mean is added to `prior_mean` (the mean the caller
// already removed, if any) to form SemanticSpace::mean. Each basis row is
// signed so that its largest-magnitude coordinate is non-negative (lowest
// index wins ties). Throws RankError unless 1 <= d_out <= min(N-1, D).
SemanticSpace fit_pca(const Matrix& sample, std::size_t d_out, std::span<const float> prior_mean = {});

// Estimate the mean, demean, then fit_pca; the usual way to build a space
// from raw pooled vectors.
SemanticSpace fit_space(const Matrix& raw_sample, std::size_t d_out, std::string space_id = {},
                        std::uint64_t seed = 0);

Matrix apply_pca(const SemanticSpace& space, const Matrix& vectors);

// Squared Euclidean distance accumulated in double, coordinate by coordinate.
double squared_l2(std::span<const float> a, std::span<const float> b) noexcept;

// Indices of the k nearest candidates to row `query_index` under L2, nearest
// first, ties broken by lower index. The query itself is never returned.
std::vector<std::size_t> knn(std::size_t query_index, const Matrix& candidates, std::size_t k);

struct AnisotropyResult {
  double mean_cosine = 0.0;
  std::size_t pairs = 0;
  std::size_t resampled = 0;  // draws rejected because a row had zero norm
};

// Mean cosine similarity over n_pairs uniformly drawn pairs of distinct rows.
AnisotropyResult anisotropy(const Matrix& sample, std::size_t n_pairs, std::uint64_t seed);

// Deterministic sample of min(n, N) distinct row indices (partial Fisher-Yates
// on std::mt19937_64), returned in ascending order.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed);

// "SPC1" | u32 version | u32 header length | JSON header |
// u32 D | u32 D' | D x f32 mean | D'*D x f32 basis (row-major), little-endian.
void write_space(std::ostream& out, const SemanticSpace& space);
SemanticSpace read_space(std::istream& in);
void save_space(const std::filesystem::path& path, const SemanticSpace& space);
SemanticSpace load_space_file(const std::filesystem::path& path);

}  // namespace sciembed
