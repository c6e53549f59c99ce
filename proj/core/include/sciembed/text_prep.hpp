#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace sciembed {

inline constexpr std::string_view kNumberMask = "<NUM>";

struct NormalizedText {
  std::string text;
  std::uint64_t source_pmid = 0;

  friend bool operator==(const NormalizedText&, const NormalizedText&) = default;
};

// Lowercases ASCII, Latin-1, Latin Extended-A, basic Greek and Cyrillic
// capitals. Invalid UTF-8 bytes pass through unchanged. Locale independent.
std::string lowercase(std::string_view text);

// Within every whitespace-delimited token that contains an ASCII digit, the
// span from the first digit to the last digit is replaced by "<NUM>"; the
// characters around it are kept. A '<' immediately before the first digit is
// absorbed into the mask ("p<0.05)." -> "p<NUM>)."). Whitespace is preserved
// byte for byte.
std::string mask_numbers(std::string_view text);

// mask_numbers(lowercase(title + ". " + abstract)), both trimmed. When the
// title already ends in '.', '!' or '?' only a space separates the two.
// Throws ContractError if either part is blank.
NormalizedText normalize(std::string_view title, std::string_view abstract,
                         std::uint64_t source_pmid = 0);

std::string_view trim(std::string_view s) noexcept;

}  // namespace sciembed
