#include "sciembed/pooling.hpp"

#include <cmath>

#include "sciembed/error.hpp"

namespace sciembed {

namespace {

template <typename Pred>
std::vector<float> mean_rows(const ActivationMatrix& m, Pred keep, std::size_t& used) {
  const auto d = m.width();
  std::vector<double> acc(d, 0.0);
  used = 0;
  for (std::size_t i = 0; i < m.token_count(); ++i) {
    if (!keep(i)) continue;
    const auto row = m.rows.row(i);
    for (std::size_t j = 0; j < d; ++j) acc[j] += row[j];
    ++used;
  }
  std::vector<float> out(d, 0.0f);
  if (used == 0) return out;
  for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<float>(acc[j] / static_cast<double>(used));
  return out;
}

void require_shape(const ActivationMatrix& m) {
  if (m.special_mask.size() != m.token_count() || m.rows.rows() != m.token_count()) {
    throw DimensionError("activation matrix rows vs tokens", m.token_count(), m.rows.rows());
  }
}

}  // namespace

std::string_view to_string(PoolingStrategy s) noexcept {
  switch (s) {
    case PoolingStrategy::kMeanTokens:
      return "mean_tokens";
    case PoolingStrategy::kCls:
      return "cls";
    case PoolingStrategy::kMeanLongTokens:
      return "mean_long_tokens";
    case PoolingStrategy::kClsConcatMean:
      return "cls_concat_mean";
    case PoolingStrategy::kMeanWords:
      return "mean_words";
    case PoolingStrategy::kStaticMean:
      return "static_mean";
  }
  return "mean_tokens";
}

std::optional<PoolingStrategy> parse_pooling_strategy(std::string_view tag) noexcept {
  for (auto s : kAllPoolingStrategies) {
    if (to_string(s) == tag) return s;
  }
  return std::nullopt;
}

std::size_t utf8_length(std::string_view s) noexcept {
  std::size_t n = 0;
  for (char c : s) {
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  }
  return n;
}

PooledVector pool_mean_tokens(const ActivationMatrix& m) {
  require_shape(m);
  std::size_t used = 0;
  auto v = mean_rows(m, [&](std::size_t i) { return !m.is_special(i); }, used);
  if (used == 0) throw EmptyPoolError("pmid " + std::to_string(m.pmid) + " has no regular tokens");
  return PooledVector{m.pmid, PoolingStrategy::kMeanTokens, std::move(v), false};
}

PooledVector pool_cls(const ActivationMatrix& m) {
  require_shape(m);
  if (m.token_count() == 0 || !m.is_special(0)) {
    throw ContractError("pmid " + std::to_string(m.pmid) + ": first token is not a classification token");
  }
  const auto row = m.rows.row(0);
  return PooledVector{m.pmid, PoolingStrategy::kCls, std::vector<float>(row.begin(), row.end()), false};
}

PooledVector pool_long_tokens(const ActivationMatrix& m, std::size_t min_chars, std::string_view marker) {
  require_shape(m);
  auto is_long = [&](std::size_t i) {
    if (m.is_special(i)) return false;
    std::string_view tok = m.tokens[i];
    if (!marker.empty() && tok.starts_with(marker)) tok.remove_prefix(marker.size());
    return utf8_length(tok) >= min_chars;
  };
  std::size_t used = 0;
  auto v = mean_rows(m, is_long, used);
  if (used > 0) return PooledVector{m.pmid, PoolingStrategy::kMeanLongTokens, std::move(v), false};
  auto fb = pool_mean_tokens(m);
  fb.strategy = PoolingStrategy::kMeanLongTokens;
  fb.fallback = true;
  return fb;
}

PooledVector pool_cls_concat_mean(const ActivationMatrix& m) {
  auto cls = pool_cls(m);
  const auto mean = pool_mean_tokens(m);
  cls.values.insert(cls.values.end(), mean.values.begin(), mean.values.end());
  cls.strategy = PoolingStrategy::kClsConcatMean;
  return cls;
}

PooledVector pool_mean_words(const ActivationMatrix& m, const WordAlignment& alignment) {
  require_shape(m);
  if (alignment.groups.empty()) throw EmptyPoolError("pmid " + std::to_string(m.pmid) + " has no words");
  const auto d = m.width();
  std::vector<double> acc(d, 0.0);
  std::vector<double> word(d);
  for (const auto& g : alignment.groups) {
    if (g.empty()) throw ContractError("empty word group");
    std::fill(word.begin(), word.end(), 0.0);
    for (auto i : g) {
      if (i >= m.token_count()) throw ContractError("alignment index out of range");
      if (m.is_special(i)) throw ContractError("alignment covers a special token");
      const auto row = m.rows.row(i);
      for (std::size_t j = 0; j < d; ++j) word[j] += row[j];
    }
    const double n = static_cast<double>(g.size());
    for (std::size_t j = 0; j < d; ++j) acc[j] += word[j] / n;
  }
  std::vector<float> out(d);
  const double words = static_cast<double>(alignment.groups.size());
  for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<float>(acc[j] / words);
  return PooledVector{m.pmid, PoolingStrategy::kMeanWords, std::move(out), false};
}

PooledVector pool_static_mean(std::span<const std::string> words, const WordVectorTable& table,
                              std::uint64_t pmid) {
  const auto d = table.dimension();
  std::vector<double> acc(d, 0.0);
  std::size_t used = 0;
  for (const auto& w : words) {
    const auto v = table.lookup(w);
    if (!v) continue;
    double sq = 0.0;
    for (float x : *v) sq += static_cast<double>(x) * x;
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t j = 0; j < d; ++j) acc[j] += (*v)[j] * inv;
    ++used;
  }
  if (used == 0) throw EmptyPoolError("no in-vocabulary words for pmid " + std::to_string(pmid));
  std::vector<float> out(d);
  for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<float>(acc[j] / static_cast<double>(used));
  return PooledVector{pmid, PoolingStrategy::kStaticMean, std::move(out), false};
}

PooledVector pool(const ActivationMatrix& m, PoolingStrategy strategy, const PoolingOptions& options) {
  switch (strategy) {
    case PoolingStrategy::kMeanTokens:
      return pool_mean_tokens(m);
    case PoolingStrategy::kCls:
      return pool_cls(m);
    case PoolingStrategy::kMeanLongTokens:
      return pool_long_tokens(m, options.min_chars, options.continuation_marker);
    case PoolingStrategy::kClsConcatMean:
      return pool_cls_concat_mean(m);
    case PoolingStrategy::kMeanWords:
      return pool_mean_words(m, align_subwords(m.tokens, m.special_mask, options.continuation_marker));
    case PoolingStrategy::kStaticMean:
      break;
  }
  throw ContractError("static_mean pooling needs a word-vector table; use pool_static_mean");
}

}  // namespace sciembed
