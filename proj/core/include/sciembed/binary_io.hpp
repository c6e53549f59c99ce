#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

#include "sciembed/error.hpp"

// Little-endian primitives shared by the container, shard and space formats.
namespace sciembed::binary {


template <typename T>
inline void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  out.append(bytes.data(), bytes.size());
}

template <typename T>
inline T get_le(const char* p) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

// Sequential reader that tracks the absolute stream offset for error messages.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint64_t offset() const noexcept { return offset_; }

  // Reads exactly n bytes into dst; returns false on a short read.
  bool read(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    offset_ += got;
    return got == n;
  }

  template <typename T>
  T get(std::string_view what) {
    char buf[sizeof(T)];
    const auto at = offset_;
    if (!read(buf, sizeof(T))) throw FormatError("truncated " + std::string(what), at);
    return get_le<T>(buf);
  }

  // True when the stream has no more bytes.
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& in_;
  std::uint64_t offset_ = 0;
};

}  // namespace sciembed::binary
