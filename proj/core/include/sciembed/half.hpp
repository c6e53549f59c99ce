#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sciembed {

// IEEE-754 binary16 conversion. Rounding is round-to-nearest-even; values
// beyond the binary16 range become infinity and NaN stays NaN, so callers
// that require finite storage must check with is_finite_half().
std::uint16_t float_to_half(float value) noexcept;
float half_to_float(std::uint16_t bits) noexcept;

inline bool is_finite_half(std::uint16_t bits) noexcept { return (bits & 0x7C00u) != 0x7C00u; }

// Round a float through binary16 and back.
inline float quantize_half(float value) noexcept { return half_to_float(float_to_half(value)); }

std::vector<std::uint16_t> to_half(std::span<const float> values);
std::vector<float> from_half(std::span<const std::uint16_t> bits);

}  // namespace sciembed
