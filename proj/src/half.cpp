#include "bivlm/half.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "bivlm/errors.hpp"

namespace bivlm {

std::uint16_t float_to_half(float value) {
  const std::uint32_t f = std::bit_cast<std::uint32_t>(value);
  const std::uint16_t sign = static_cast<std::uint16_t>((f >> 16) & 0x8000u);
  const std::uint32_t exp = (f >> 23) & 0xffu;
  std::uint32_t mant = f & 0x7fffffu;

  if (exp == 0xffu) {
    // Inf stays Inf; NaN keeps a quiet payload bit.
    return static_cast<std::uint16_t>(sign | 0x7c00u | (mant ? 0x200u | (mant >> 13) : 0u));
  }

  const int e = static_cast<int>(exp) - 127 + 15;
  if (e >= 0x1f) return static_cast<std::uint16_t>(sign | 0x7c00u);

  if (e <= 0) {
    // Subnormal half (or underflow to zero).
    if (e < -10) return sign;
    mant |= 0x800000u;
    const int shift = 14 - e;
    std::uint32_t half_mant = mant >> shift;
    const std::uint32_t rem = mant & ((1u << shift) - 1u);
    const std::uint32_t halfway = 1u << (shift - 1);
    if (rem > halfway || (rem == halfway && (half_mant & 1u))) ++half_mant;
    return static_cast<std::uint16_t>(sign | half_mant);
  }

  std::uint32_t h = (static_cast<std::uint32_t>(e) << 10) | (mant >> 13);
  const std::uint32_t rem = mant & 0x1fffu;
  // A carry out of the mantissa correctly bumps the exponent (up to Inf).
  if (rem > 0x1000u || (rem == 0x1000u && (h & 1u))) ++h;
  return static_cast<std::uint16_t>(sign | h);
}

float half_to_float(std::uint16_t bits) {
  const std::uint32_t sign = static_cast<std::uint32_t>(bits & 0x8000u) << 16;
  const std::uint32_t exp = (bits >> 10) & 0x1fu;
  std::uint32_t mant = bits & 0x3ffu;

  if (exp == 0x1fu) return std::bit_cast<float>(sign | 0x7f800000u | (mant << 13));
  if (exp == 0) {
    if (mant == 0) return std::bit_cast<float>(sign);
    // Normalise the subnormal.
    int e = -1;
    do {
      ++e;
      mant <<= 1;
    } while ((mant & 0x400u) == 0);
    const std::uint32_t f_exp = static_cast<std::uint32_t>(127 - 15 - e);
    return std::bit_cast<float>(sign | (f_exp << 23) | ((mant & 0x3ffu) << 13));
  }
  return std::bit_cast<float>(sign | ((exp + 127 - 15) << 23) | (mant << 13));
}

namespace {

// Nearest binary16 to a double. Going through binary32 first would round
// twice and can land one ulp off at a tie, so the binary32 route only picks
// a candidate and its two magnitude neighbours decide.
double round_to_half(double value) {
  if (!std::isfinite(value)) return half_to_float(float_to_half(static_cast<float>(value)));
  const double mag = std::fabs(value);
  if (mag >= 65520.0) return std::copysign(HUGE_VAL, value);
  const std::uint16_t h = float_to_half(static_cast<float>(mag));
  double best = half_to_float(h);
  for (int step : {-1, 1}) {
    if (h == 0 && step < 0) continue;
    const auto c = static_cast<std::uint16_t>(h + step);
    if (c >= 0x7c00u) continue;
    const double v = half_to_float(c);
    const double d = std::fabs(v - mag), bd = std::fabs(best - mag);
    if (d < bd || (d == bd && (c & 1u) == 0)) best = v;
  }
  return std::copysign(best, value);
}

}  // namespace

double round_to_width(double value, int width) {
  switch (width) {
    case 16:
      return round_to_half(value);
    case 32:
      return static_cast<float>(value);
    default:
      throw DomainError("unsupported scale width " + std::to_string(width) + " (expected 16 or 32)");
  }
}

}  // namespace bivlm
