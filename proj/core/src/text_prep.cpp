#include "sciembed/text_prep.hpp"

#include "sciembed/error.hpp"

namespace sciembed {

namespace {

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

char32_t lower_code_point(char32_t cp) {
  // Latin-1 Supplement capitals, excluding the multiplication sign.
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  // Latin Extended-A alternates capital/small in pairs, with two offsets.
  if (cp >= 0x100 && cp <= 0x137) return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp >= 0x14A && cp <= 0x177) return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp == 0x178) return 0xFF;
  if (cp >= 0x179 && cp <= 0x17E) return (cp % 2 == 1) ? cp + 1 : cp;
  // Greek and Cyrillic basic capitals.
  if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 0x20;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  return cp;
}

}  // namespace

std::string_view trim(std::string_view s) noexcept {
  std::size_t b = 0, e = s.size();
  while (b < e && is_ascii_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_ascii_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lowercase(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c < 0x80) {
      out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : static_cast<char>(c);
      ++i;
      continue;
    }
    // Decode 2- and 3-byte sequences; everything else is copied verbatim.
    if ((c & 0xE0) == 0xC0 && i + 1 < text.size() &&
        (static_cast<unsigned char>(text[i + 1]) & 0xC0) == 0x80) {
      const char32_t cp = ((c & 0x1F) << 6) | (static_cast<unsigned char>(text[i + 1]) & 0x3F);
      if (cp >= 0x80) {
        append_utf8(out, lower_code_point(cp));
        i += 2;
        continue;
      }
    }
    out += static_cast<char>(c);
    ++i;
  }
  return out;
}

std::string mask_numbers(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_ascii_space(static_cast<unsigned char>(text[i]))) {
      out += text[i++];
      continue;
    }
    std::size_t end = i;
    while (end < text.size() && !is_ascii_space(static_cast<unsigned char>(text[end]))) ++end;
    const auto token = text.substr(i, end - i);
    std::size_t first = token.size(), last = 0;
    for (std::size_t k = 0; k < token.size(); ++k) {
      if (is_ascii_digit(token[k])) {
        if (first == token.size()) first = k;
        last = k;
      }
    }
    // A '<' directly in front of the number goes with it, so "p<0.05" reads
    // "p<NUM>" rather than "p<<NUM>".
    if (first != token.size() && first > 0 && token[first - 1] == '<') --first;
    if (first == token.size()) {
      out += token;
    } else {
      out += token.substr(0, first);
      out += kNumberMask;
      out += token.substr(last + 1);
    }
    i = end;
  }
  return out;
}

NormalizedText normalize(std::string_view title, std::string_view abstract, std::uint64_t source_pmid) {
  const auto t = trim(title);
  const auto a = trim(abstract);
  if (t.empty()) throw ContractError("normalize: empty title");
  if (a.empty()) throw ContractError("normalize: empty abstract");
  std::string joined(t);
  const char last = t.back();
  joined += (last == '.' || last == '!' || last == '?') ? " " : ". ";
  joined += a;
  return NormalizedText{mask_numbers(lowercase(joined)), source_pmid};
}

}  // namespace sciembed
