#pragma once

#include <cstdint>

namespace bivlm {

/// IEEE 754 binary16 <-> binary32 conversion. Rounds to nearest, ties to even;
/// overflow saturates to infinity.
std::uint16_t float_to_half(float value);
float half_to_float(std::uint16_t bits);

/// Rounds `value` to the nearest number representable with `width` bits
/// (16 = binary16, 32 = binary32).
double round_to_width(double value, int width);

}  // namespace bivlm
