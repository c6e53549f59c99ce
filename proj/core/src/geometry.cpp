#include "sciembed/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sciembed/binary_io.hpp"
#include "sciembed/error.hpp"
#include "sciembed/fs_util.hpp"

namespace sciembed {

namespace {

constexpr char kSpaceMagic[4] = {'S', 'P', 'C', '1'};
constexpr std::uint32_t kSpaceVersion = 1;

}  // namespace

std::vector<float> estimate_mean(const Matrix& sample) {
  if (sample.rows() == 0) throw ContractError("estimate_mean: empty sample");
  std::vector<double> acc(sample.cols(), 0.0);
  for (std::size_t i = 0; i < sample.rows(); ++i) {
    const auto r = sample.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) acc[j] += r[j];
  }
  std::vector<float> mean(acc.size());
  const double n = static_cast<double>(sample.rows());
  for (std::size_t j = 0; j < acc.size(); ++j) mean[j] = static_cast<float>(acc[j] / n);
  return mean;
}

Matrix demean(const Matrix& vectors, std::span<const float> mean) {
  if (mean.size() != vectors.cols()) throw DimensionError("demean: mean length", vectors.cols(), mean.size());
  Matrix out = vectors;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] -= mean[j];
  }
  return out;
}

SemanticSpace fit_pca(const Matrix& sample, std::size_t d_out, std::span<const float> prior_mean) {
  const std::size_t n = sample.rows();
  const std::size_t d = sample.cols();
  if (d_out < 1 || n < 2 || d_out > std::min(n - 1, d)) {
    throw RankError("fit_pca: cannot extract " + std::to_string(d_out) + " components from " +
                    std::to_string(n) + " x " + std::to_string(d) + " sample");
  }
  if (!prior_mean.empty() && prior_mean.size() != d) {
    throw DimensionError("fit_pca: prior mean length", d, prior_mean.size());
  }

  Eigen::RowVectorXd residual = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = sample.row(i);
    for (std::size_t j = 0; j < d; ++j) residual(static_cast<Eigen::Index>(j)) += r[j];
  }
  residual /= static_cast<double>(n);

  // Accumulate the scatter matrix over row blocks to keep memory at O(D^2).
  constexpr std::size_t kBlock = 512;
  const auto dd = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(dd, dd);
  Eigen::MatrixXd block;
  for (std::size_t start = 0; start < n; start += kBlock) {
    const std::size_t rows = std::min(kBlock, n - start);
    block.resize(static_cast<Eigen::Index>(rows), dd);
    for (std::size_t i = 0; i < rows; ++i) {
      const auto r = sample.row(start + i);
      for (std::size_t j = 0; j < d; ++j) {
        block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            static_cast<double>(r[j]) - residual(static_cast<Eigen::Index>(j));
      }
    }
    scatter.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
  }
  const Eigen::MatrixXd cov =
      Eigen::MatrixXd(scatter.selfadjointView<Eigen::Lower>()) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("fit_pca: eigendecomposition failed");
  const Eigen::VectorXd& evals = solver.eigenvalues();   // ascending
  const Eigen::MatrixXd& evecs = solver.eigenvectors();  // columns

  // Eigenvalues at round-off level relative to the largest are reported as 0.
  const double top = std::max(evals(static_cast<Eigen::Index>(d - 1)), 0.0);
  const double floor = top * static_cast<double>(d) * std::numeric_limits<double>::epsilon();

  SemanticSpace space;
  space.input_dim = d;
  space.output_dim = d_out;
  space.basis = Matrix(d_out, d);
  space.explained_variance.resize(d_out);
  for (std::size_t k = 0; k < d_out; ++k) {
    const auto col = static_cast<Eigen::Index>(d - 1 - k);
    double ev = evals(col);
    if (ev <= floor) ev = 0.0;
    space.explained_variance[k] = ev;

    Eigen::VectorXd v = evecs.col(col);
    Eigen::Index pivot = 0;
    for (Eigen::Index j = 1; j < v.size(); ++j) {
      if (std::abs(v(j)) > std::abs(v(pivot))) pivot = j;
    }
    if (v(pivot) < 0) v = -v;
    auto row = space.basis.row(k);
    for (std::size_t j = 0; j < d; ++j) row[j] = static_cast<float>(v(static_cast<Eigen::Index>(j)));
  }

  space.mean.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double prior = prior_mean.empty() ? 0.0 : prior_mean[j];
    space.mean[j] = static_cast<float>(prior + residual(static_cast<Eigen::Index>(j)));
  }
  return space;
}

SemanticSpace fit_space(const Matrix& raw_sample, std::size_t d_out, std::string space_id, std::uint64_t seed) {
  const auto mean = estimate_mean(raw_sample);
  auto space = fit_pca(demean(raw_sample, mean), d_out, mean);
  space.space_id = std::move(space_id);
  space.seed = seed;
  return space;
}

Matrix apply_pca(const SemanticSpace& space, const Matrix& vectors) {
  if (vectors.cols() != space.input_dim) {
    throw DimensionError("apply_pca: input dimension", space.input_dim, vectors.cols());
  }
  Matrix out(vectors.rows(), space.output_dim);
  std::vector<double> centred(space.input_dim);
  for (std::size_t i = 0; i < vectors.rows(); ++i) {
    const auto r = vectors.row(i);
    for (std::size_t j = 0; j < space.input_dim; ++j) {
      centred[j] = static_cast<double>(r[j]) - static_cast<double>(space.mean[j]);
    }
    auto o = out.row(i);
    for (std::size_t k = 0; k < space.output_dim; ++k) {
      const auto b = space.basis.row(k);
      double acc = 0.0;
      for (std::size_t j = 0; j < space.input_dim; ++j) acc += b[j] * centred[j];
      o[k] = static_cast<float>(acc);
    }
  }
  return out;
}

double squared_l2(std::span<const float> a, std::span<const float> b) noexcept {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    acc += diff * diff;
  }
  return acc;
}

std::vector<std::size_t> knn(std::size_t query_index, const Matrix& candidates, std::size_t k) {
  const std::size_t n = candidates.rows();
  if (query_index >= n) throw ContractError("knn: query index out of range");
  if (k < 1 || k > n - 1) {
    throw RankError("knn: k=" + std::to_string(k) + " outside [1, " + std::to_string(n - 1) + "]");
  }
  const auto q = candidates.row(query_index);
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == query_index) continue;
    dist.emplace_back(squared_l2(q, candidates.row(i)), i);
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed) {
  n = std::min(n, population);
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, population - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

AnisotropyResult anisotropy(const Matrix& sample, std::size_t n_pairs, std::uint64_t seed) {
  const std::size_t n = sample.rows();
  std::vector<double> sq(n);
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (float x : sample.row(i)) s += static_cast<double>(x) * x;
    sq[i] = s;
    if (s > 0.0) ++nonzero;
  }
  if (nonzero < 2) throw ContractError("anisotropy: need at least two rows with nonzero norm");
  if (n_pairs == 0) throw ContractError("anisotropy: n_pairs must be positive");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::uniform_int_distribution<std::size_t> second(0, n - 2);
  AnisotropyResult result;
  double total = 0.0;
  while (result.pairs < n_pairs) {
    const std::size_t i = first(rng);
    std::size_t j = second(rng);
    if (j >= i) ++j;
    if (sq[i] == 0.0 || sq[j] == 0.0) {
      ++result.resampled;
      continue;
    }
    const auto a = sample.row(i);
    const auto b = sample.row(j);
    double dot = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) dot += static_cast<double>(a[k]) * b[k];
    // sqrt(x*x) == x exactly, so identical rows give exactly 1.
    total += dot / std::sqrt(sq[i] * sq[j]);
    ++result.pairs;
  }
  result.mean_cosine = total / static_cast<double>(result.pairs);
  return result;
}

void write_space(std::ostream& out, const SemanticSpace& space) {
  if (space.mean.size() != space.input_dim || space.basis.rows() != space.output_dim ||
      space.basis.cols() != space.input_dim || space.explained_variance.size() != space.output_dim) {
    throw ContractError("write_space: inconsistent space dimensions");
  }
  nlohmann::ordered_json header;
  header["space_id"] = space.space_id;
  header["input_dim"] = space.input_dim;
  header["output_dim"] = space.output_dim;
  header["seed"] = space.seed;
  header["explained_variance"] = space.explained_variance;
  const auto text = header.dump();

  std::string buf;
  buf.append(kSpaceMagic, 4);
  binary::put_le<std::uint32_t>(buf, kSpaceVersion);
  binary::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(text.size()));
  buf += text;
  binary::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(space.input_dim));
  binary::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(space.output_dim));
  for (float v : space.mean) binary::put_le<float>(buf, v);
  for (float v : space.basis.data()) binary::put_le<float>(buf, v);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing space");
}

SemanticSpace read_space(std::istream& in) {
  binary::Reader r(in);
  char magic[4];
  if (!r.read(magic, 4) || std::string_view(magic, 4) != std::string_view(kSpaceMagic, 4)) {
    throw FormatError("bad space magic (expected SPC1)", 0);
  }
  const auto version = r.get<std::uint32_t>("space version");
  if (version != kSpaceVersion) throw FormatError("unsupported space version " + std::to_string(version), 4);
  const auto hlen = r.get<std::uint32_t>("header length");
  std::string text(hlen, '\0');
  if (!r.read(text.data(), hlen)) throw FormatError("truncated space header", r.offset());

  SemanticSpace space;
  try {
    const auto header = nlohmann::json::parse(text);
    space.space_id = header.at("space_id").get<std::string>();
    space.input_dim = header.at("input_dim").get<std::size_t>();
    space.output_dim = header.at("output_dim").get<std::size_t>();
    space.seed = header.at("seed").get<std::uint64_t>();
    space.explained_variance = header.at("explained_variance").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad space header: ") + e.what(), 12);
  }
  const auto d = r.get<std::uint32_t>("input dimension");
  const auto d_out = r.get<std::uint32_t>("output dimension");
  if (d != space.input_dim || d_out != space.output_dim ||
      space.explained_variance.size() != space.output_dim) {
    throw FormatError("space header and payload dimensions disagree", r.offset());
  }
  space.mean.resize(d);
  for (auto& v : space.mean) v = r.get<float>("mean");
  std::vector<float> basis(std::size_t{d} * d_out);
  for (auto& v : basis) v = r.get<float>("basis");
  space.basis = Matrix(d_out, d, std::move(basis));
  return space;
}

void save_space(const std::filesystem::path& path, const SemanticSpace& space) {
  std::ostringstream ss(std::ios::binary);
  write_space(ss, space);
  atomic_write_file(path, ss.str());
}

SemanticSpace load_space_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_space(in);
}

}  // namespace sciembed
