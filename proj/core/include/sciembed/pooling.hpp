#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sciembed/activation_io.hpp"

namespace sciembed {

enum class PoolingStrategy {
  kMeanTokens,
  kCls,
  kMeanLongTokens,
  kClsConcatMean,
  kMeanWords,
  kStaticMean,
};

inline constexpr std::array kAllPoolingStrategies = {
    PoolingStrategy::kMeanTokens, PoolingStrategy::kCls,       PoolingStrategy::kMeanLongTokens,
    PoolingStrategy::kClsConcatMean, PoolingStrategy::kMeanWords, PoolingStrategy::kStaticMean,
};

// Tags: mean_tokens, cls, mean_long_tokens, cls_concat_mean, mean_words, static_mean.
std::string_view to_string(PoolingStrategy s) noexcept;
std::optional<PoolingStrategy> parse_pooling_strategy(std::string_view tag) noexcept;

struct PooledVector {
  std::uint64_t pmid = 0;
  PoolingStrategy strategy = PoolingStrategy::kMeanTokens;
  std::vector<float> values;
  bool fallback = false;  // mean_long_tokens found no long token and fell back to mean_tokens

  friend bool operator==(const PooledVector&, const PooledVector&) = default;
};

inline constexpr std::size_t kDefaultLongTokenChars = 5;

// Mean of the regular (non-special) rows.
PooledVector pool_mean_tokens(const ActivationMatrix& m);

// Row 0, which must be marked special.
PooledVector pool_cls(const ActivationMatrix& m);

// Mean of the regular rows whose token, with the continuation marker removed,
// is at least `min_chars` UTF-8 characters long.
PooledVector pool_long_tokens(const ActivationMatrix& m, std::size_t min_chars = kDefaultLongTokenChars,
                              std::string_view continuation_marker = kDefaultContinuationMarker);

// pool_cls followed by pool_mean_tokens (length 2D).
PooledVector pool_cls_concat_mean(const ActivationMatrix& m);

// Two-stage mean: average each word's subword rows, then average the words.
PooledVector pool_mean_words(const ActivationMatrix& m, const WordAlignment& alignment);

// Unit-normalise each in-vocabulary word vector, then average. Out-of-vocabulary
// words (and zero vectors, which have no direction) are left out of both the
// sum and the count.
PooledVector pool_static_mean(std::span<const std::string> words, const WordVectorTable& table,
                              std::uint64_t pmid = 0);

struct PoolingOptions {
  std::size_t min_chars = kDefaultLongTokenChars;
  std::string continuation_marker = std::string(kDefaultContinuationMarker);
};

// Dispatch for the contextual strategies. static_mean needs a word table and
// goes through pool_static_mean instead.
PooledVector pool(const ActivationMatrix& m, PoolingStrategy strategy, const PoolingOptions& options = {});

// Number of UTF-8 code points (continuation bytes are not counted).
std::size_t utf8_length(std::string_view s) noexcept;

}  // namespace sciembed
