#include "nextline/half.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "nextline/error.hpp"
#include "nextline/kernels.hpp"

namespace nextline {

Half float_to_half(float value) {
  const auto x = std::bit_cast<std::uint32_t>(value);
  const std::uint32_t sign = (x >> 16) & 0x8000u;
  const std::uint32_t abs = x & 0x7fffffffu;

  if (abs >= 0x7f800000u) {
    if (abs == 0x7f800000u) return static_cast<Half>(sign | 0x7c00u);
    return static_cast<Half>(sign | 0x7e00u | ((abs >> 13) & 0x3ffu));
  }
  if (abs >= 0x477ff000u) return static_cast<Half>(sign | 0x7c00u);  // >= 65520

  if (abs < 0x38800000u) {  // below 2^-14: binary16 subnormal range
    if (abs < 0x33000000u) return static_cast<Half>(sign);  // below 2^-25
    const std::uint32_t exponent = abs >> 23;
    const std::uint32_t mantissa = (abs & 0x7fffffu) | 0x800000u;
    const std::uint32_t shift = 126 - exponent;
    std::uint32_t q = mantissa >> shift;
    const std::uint32_t rem = mantissa & ((1u << shift) - 1);
    const std::uint32_t halfway = 1u << (shift - 1);
    if (rem > halfway || (rem == halfway && (q & 1u))) ++q;
    return static_cast<Half>(sign | q);
  }

  const std::uint32_t exponent = (abs >> 23) - 112;
  const std::uint32_t mantissa = abs & 0x7fffffu;
  std::uint32_t q = (exponent << 10) | (mantissa >> 13);
  const std::uint32_t rem = mantissa & 0x1fffu;
  if (rem > 0x1000u || (rem == 0x1000u && (q & 1u))) ++q;
  return static_cast<Half>(sign | q);
}

float half_to_float(Half bits) {
  const std::uint32_t sign = static_cast<std::uint32_t>(bits & 0x8000u) << 16;
  std::uint32_t exponent = (bits >> 10) & 0x1fu;
  std::uint32_t mantissa = bits & 0x3ffu;

  if (exponent == 0) {
    if (mantissa == 0) return std::bit_cast<float>(sign);
    exponent = 113;
    while ((mantissa & 0x400u) == 0) {
      mantissa <<= 1;
      --exponent;
    }
    mantissa &= 0x3ffu;
    return std::bit_cast<float>(sign | (exponent << 23) | (mantissa << 13));
  }
  if (exponent == 31) {
    const std::uint32_t quiet = mantissa != 0 ? 0x400000u : 0u;
    return std::bit_cast<float>(sign | 0x7f800000u | quiet | (mantissa << 13));
  }
  return std::bit_cast<float>(sign | ((exponent + 112) << 23) | (mantissa << 13));
}

void to_half_checked(std::span<const float> in, std::span<Half> out, std::size_t row) {
  if (in.size() != out.size()) fail(ErrorKind::Internal, "to_half_checked: size mismatch");
  for (std::size_t i = 0; i < in.size(); ++i) {
    const float v = in[i];
    if (!std::isfinite(v) || std::fabs(v) > kHalfMax) {
      fail(ErrorKind::Build, "row " + std::to_string(row) + " component " + std::to_string(i) +
                                  " (" + std::to_string(v) + ") does not fit binary16");
    }
  }
  kernels::active().float_to_half(in.data(), out.data(), in.size());
}

}  // namespace nextline
