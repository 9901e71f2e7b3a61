#pragma once

#include <cstdint>
#include <span>

namespace nextline {

/// IEEE 754 binary16 bit pattern.
using Half = std::uint16_t;

/// Largest finite binary16 magnitude.
inline constexpr float kHalfMax = 65504.0f;

/// Round-to-nearest-even conversion. Out-of-range magnitudes become infinity;
/// NaN stays NaN (quiet).
Half float_to_half(float value);

float half_to_float(Half bits);

/// Converts `in` into `out` with range checking: throws a Format error
/// carrying `row` when a component is non-finite or exceeds kHalfMax.
void to_half_checked(std::span<const float> in, std::span<Half> out, std::size_t row);

}  // namespace nextline
