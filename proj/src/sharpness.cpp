#include "rainlab/sharpness.hpp"

#include <algorithm>

#include "rainlab/error.hpp"

namespace rainlab {

double sharpness(const Image& img) {
    const Image gray = to_grayscale(img);
    const int h = gray.height, w = gray.width;
    if (h == 0 || w == 0) return 0.0;
    auto px = [&](int y, int x) {
        y = std::clamp(y, 0, h - 1);
        x = std::clamp(x, 0, w - 1);
        return 255.0 * gray.data[static_cast<std::size_t>(y) * w + x];
    };
    // two-pass population variance
    std::vector<double> response(static_cast<std::size_t>(h) * w);
    double sum = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double r = px(y - 1, x) + px(y + 1, x) + px(y, x - 1) + px(y, x + 1) - 4.0 * px(y, x);
            response[static_cast<std::size_t>(y) * w + x] = r;
            sum += r;
        }
    }
    const double mean = sum / static_cast<double>(response.size());
    double var = 0.0;
    for (double r : response) var += (r - mean) * (r - mean);
    return var / static_cast<double>(response.size());
}

bool in_bin(double s, SharpnessBin bin) {
    switch (bin) {
        case SharpnessBin::low: return s < kLowSharpnessMax;
        case SharpnessBin::medium: return s >= kMediumSharpnessMin && s <= kMediumSharpnessMax;
        case SharpnessBin::high: return s > kHighSharpnessMin;
    }
    return false;
}

std::string bin_name(double s) {
    for (auto b : {SharpnessBin::low, SharpnessBin::medium, SharpnessBin::high}) {
        if (in_bin(s, b)) return to_string(b);
    }
    return "none";
}

std::string to_string(SharpnessBin bin) {
    switch (bin) {
        case SharpnessBin::low: return "low";
        case SharpnessBin::medium: return "medium";
        case SharpnessBin::high: return "high";
    }
    return "none";
}

SharpnessBin parse_bin(std::string_view name) {
    if (name == "low") return SharpnessBin::low;
    if (name == "medium") return SharpnessBin::medium;
    if (name == "high") return SharpnessBin::high;
    throw DataError("unknown sharpness bin '" + std::string(name) + "' (expected low, medium or high)");
}

}  // namespace rainlab
