#pragma once

#include <string>
#include <string_view>

#include "rainlab/image.hpp"

namespace rainlab {

// Variance of the 3x3 Laplacian response ([[0,1,0],[1,-4,1],[0,1,0]],
// replicate border) of the grayscale image on the 0-255 scale.
double sharpness(const Image& img);

enum class SharpnessBin { low, medium, high };

inline constexpr double kLowSharpnessMax = 50.0;
inline constexpr double kMediumSharpnessMin = 500.0;
inline constexpr double kMediumSharpnessMax = 1000.0;
inline constexpr double kHighSharpnessMin = 5000.0;

// low: < 50, medium: [500, 1000], high: > 5000.
bool in_bin(double sharpness_value, SharpnessBin bin);

// Bin name for a value, or "none" when it falls between bins.
std::string bin_name(double sharpness_value);
std::string to_string(SharpnessBin bin);
SharpnessBin parse_bin(std::string_view name);

}  // namespace rainlab
