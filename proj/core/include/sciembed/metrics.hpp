#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sciembed/matrix.hpp"

namespace sciembed {

// A named collection of embedded elements: documents, words, keywords.
struct ElementSet {
  std::string name;
  Matrix elements;
  std::vector<std::uint64_t> ids;  // optional, one per row when present

  std::size_t size() const noexcept { return elements.rows(); }
  std::size_t dimension() const noexcept { return elements.cols(); }
};

std::vector<double> centroid(const ElementSet& s);

// Mean L2 distance over all unordered pairs. Needs at least two elements.
double breadth_pairwise(const ElementSet& s);

// Mean L2 distance of each element from the centroid.
double breadth_sigma(const ElementSet& s);

enum class DistanceMetric { kL2, kCosine };

// Distance between the two centroids; cosine distance is 1 - cosine similarity.
double set_distance(const ElementSet& a, const ElementSet& b, DistanceMetric metric = DistanceMetric::kL2);

// All M(M-1)/2 pairwise L2 distances, pair (i, j) with i < j in row-major order.
std::vector<double> pairwise_distances(const ElementSet& s);

// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value.
double distance_threshold(std::span<const double> sample, double percentile = 90.0);

// Fraction of unordered pairs whose distance strictly exceeds `threshold`.
double novelty_fraction(const ElementSet& s, double threshold);

struct SemanticAxis {
  std::vector<float> direction;
  std::vector<std::string> positive_names;
  std::vector<std::string> negative_names;
};

// Mean of the unit-normalised centroid differences positive[i] - negative[i].
SemanticAxis build_axis(std::span<const ElementSet> positive, std::span<const ElementSet> negative);

// Cosine similarity between doc and the axis direction, clamped to [-1, 1].
double project_on_axis(std::span<const float> doc, const SemanticAxis& axis);

struct ArchetypeMixture {
  std::vector<double> weights;  // non-negative, sum to 1
  double residual = 0.0;        // ||doc - projection onto the archetype span||
  bool degenerate = false;      // projection had no positive mass; weights are uniform
};

// Least-squares coordinates of doc in the span of the archetype rows, negative
// coordinates clipped to zero and the rest renormalised to sum 1.
ArchetypeMixture archetype_mixture(std::span<const float> doc, const Matrix& archetypes);

// exp(mean loss). Losses must be finite and non-negative.
double perplexity(std::span<const double> losses);
double perplexity(std::span<const float> losses);

}  // namespace sciembed
