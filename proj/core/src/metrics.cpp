#include "sciembed/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "sciembed/error.hpp"
#include "sciembed/geometry.hpp"

namespace sciembed {

namespace {

void require_nonempty(const ElementSet& s, const char* op) {
  if (s.size() == 0) throw ContractError(std::string(op) + ": element set '" + s.name + "' is empty");
}

void require_pairs(const ElementSet& s, const char* op) {
  if (s.size() < 2) throw ContractError(std::string(op) + ": element set '" + s.name + "' needs at least 2 elements");
}

double norm_sq(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

template <typename T>
double mean_of(std::span<const T> values) {
  // Shifting by the first value keeps constant sequences exact.
  const double base = values.front();
  double acc = 0.0;
  for (T v : values) acc += static_cast<double>(v) - base;
  return base + acc / static_cast<double>(values.size());
}

template <typename T>
double perplexity_impl(std::span<const T> losses) {
  if (losses.empty()) throw ContractError("perplexity: no losses");
  for (T v : losses) {
    if (!std::isfinite(static_cast<double>(v)) || v < 0) {
      throw ContractError("perplexity: losses must be finite and non-negative");
    }
  }
  return std::exp(mean_of(losses));
}

}  // namespace

std::vector<double> centroid(const ElementSet& s) {
  require_nonempty(s, "centroid");
  std::vector<double> c(s.dimension(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto r = s.elements.row(i);
    for (std::size_t j = 0; j < c.size(); ++j) c[j] += r[j];
  }
  for (auto& x : c) x /= static_cast<double>(s.size());
  return c;
}

double breadth_pairwise(const ElementSet& s) {
  require_pairs(s, "breadth_pairwise");
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      total += std::sqrt(squared_l2(s.elements.row(i), s.elements.row(j)));
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

double breadth_sigma(const ElementSet& s) {
  const auto c = centroid(s);
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto r = s.elements.row(i);
    double sq = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      const double d = r[j] - c[j];
      sq += d * d;
    }
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(s.size());
}

double set_distance(const ElementSet& a, const ElementSet& b, DistanceMetric metric) {
  require_nonempty(a, "set_distance");
  require_nonempty(b, "set_distance");
  if (a.dimension() != b.dimension()) throw DimensionError("set_distance: dimensions", a.dimension(), b.dimension());
  const auto ca = centroid(a);
  const auto cb = centroid(b);
  if (metric == DistanceMetric::kL2) {
    double sq = 0.0;
    for (std::size_t j = 0; j < ca.size(); ++j) sq += (ca[j] - cb[j]) * (ca[j] - cb[j]);
    return std::sqrt(sq);
  }
  const double na = norm_sq(ca);
  const double nb = norm_sq(cb);
  if (na == 0.0 || nb == 0.0) throw ContractError("set_distance: cosine of a zero centroid is undefined");
  double dot = 0.0;
  for (std::size_t j = 0; j < ca.size(); ++j) dot += ca[j] * cb[j];
  return 1.0 - std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

std::vector<double> pairwise_distances(const ElementSet& s) {
  std::vector<double> out;
  if (s.size() >= 2) out.reserve(s.size() * (s.size() - 1) / 2);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      out.push_back(std::sqrt(squared_l2(s.elements.row(i), s.elements.row(j))));
    }
  }
  return out;
}

double distance_threshold(std::span<const double> sample, double percentile) {
  if (sample.empty()) throw ContractError("distance_threshold: empty sample");
  if (!(percentile > 0.0 && percentile < 100.0)) {
    throw ContractError("distance_threshold: percentile must lie in (0, 100)");
  }
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(percentile * n / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

double novelty_fraction(const ElementSet& s, double threshold) {
  require_pairs(s, "novelty_fraction");
  std::size_t above = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      if (std::sqrt(squared_l2(s.elements.row(i), s.elements.row(j))) > threshold) ++above;
      ++pairs;
    }
  }
  return static_cast<double>(above) / static_cast<double>(pairs);
}

SemanticAxis build_axis(std::span<const ElementSet> positive, std::span<const ElementSet> negative) {
  if (positive.empty() || positive.size() != negative.size()) {
    throw ContractError("build_axis: need equally many positive and negative sets (at least one pair)");
  }
  const std::size_t d = positive.front().dimension();
  std::vector<double> acc(d, 0.0);
  SemanticAxis axis;
  for (std::size_t p = 0; p < positive.size(); ++p) {
    if (positive[p].dimension() != d || negative[p].dimension() != d) {
      throw DimensionError("build_axis: pair " + std::to_string(p) + " dimension", d,
                           positive[p].dimension() != d ? positive[p].dimension() : negative[p].dimension());
    }
    const auto cp = centroid(positive[p]);
    const auto cn = centroid(negative[p]);
    std::vector<double> diff(d);
    for (std::size_t j = 0; j < d; ++j) diff[j] = cp[j] - cn[j];
    const double n = std::sqrt(norm_sq(diff));
    if (n == 0.0) {
      throw ContractError("build_axis: degenerate pair " + std::to_string(p) + " ('" + positive[p].name + "' vs '" +
                          negative[p].name + "') has identical centroids");
    }
    for (std::size_t j = 0; j < d; ++j) acc[j] += diff[j] / n;
    axis.positive_names.push_back(positive[p].name);
    axis.negative_names.push_back(negative[p].name);
  }
  axis.direction.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    axis.direction[j] = static_cast<float>(acc[j] / static_cast<double>(positive.size()));
  }
  if (std::all_of(axis.direction.begin(), axis.direction.end(), [](float x) { return x == 0.0f; })) {
    throw ContractError("build_axis: pair directions cancel to a zero axis");
  }
  return axis;
}

double project_on_axis(std::span<const float> doc, const SemanticAxis& axis) {
  const auto& v = axis.direction;
  if (doc.size() != v.size()) throw DimensionError("project_on_axis: dimension", v.size(), doc.size());
  double dot = 0.0, nd = 0.0, nv = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    dot += static_cast<double>(doc[j]) * v[j];
    nd += static_cast<double>(doc[j]) * doc[j];
    nv += static_cast<double>(v[j]) * v[j];
  }
  if (nd == 0.0) throw ContractError("project_on_axis: zero document vector");
  if (nv == 0.0) throw ContractError("project_on_axis: zero axis");
  return std::clamp(dot / std::sqrt(nd * nv), -1.0, 1.0);
}

ArchetypeMixture archetype_mixture(std::span<const float> doc, const Matrix& archetypes) {
  const auto k = archetypes.rows();
  const auto d = archetypes.cols();
  if (k < 2) throw ContractError("archetype_mixture: need at least two archetypes");
  if (doc.size() != d) throw DimensionError("archetype_mixture: dimension", d, doc.size());

  Eigen::MatrixXd a(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    const auto r = archetypes.row(i);
    for (std::size_t j = 0; j < d; ++j) a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = r[j];
  }
  Eigen::VectorXd x(static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(j)) = doc[j];

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(k)) {
    throw RankError("archetype_mixture: archetypes are linearly dependent (rank " + std::to_string(qr.rank()) +
                    " < " + std::to_string(k) + ")");
  }
  const Eigen::VectorXd coords = qr.solve(x);
  const Eigen::VectorXd projection = a * coords;

  ArchetypeMixture out;
  out.residual = (x - projection).norm();
  out.weights.assign(k, 0.0);
  double mass = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double c = coords(static_cast<Eigen::Index>(i));
    if (c > 0.0) {
      out.weights[i] = c;
      mass += c;
    }
  }
  const double scale = std::max(x.norm(), a.colwise().norm().maxCoeff());
  if (projection.norm() <= 1e-12 * scale || mass <= 0.0) {
    out.weights.assign(k, 1.0 / static_cast<double>(k));
    out.degenerate = true;
    return out;
  }
  for (auto& w : out.weights) w /= mass;
  return out;
}

double perplexity(std::span<const double> losses) { return perplexity_impl(losses); }
double perplexity(std::span<const float> losses) { return perplexity_impl(losses); }

}  // namespace sciembed
