#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rainlab/image.hpp"

namespace rainlab::rain {

// Parameter intervals streaks are drawn from. Direction is the tilt from
// vertical in degrees; a positive angle leans the upper end of the streak to
// the right ("/"), i.e. a clockwise rotation on screen.
struct RainRange {
    std::string name;
    int quantity_lo = 0;
    int quantity_hi = 0;
    std::vector<int> widths;
    double length_lo = 0.0;
    double length_hi = 0.0;
    double direction_lo = 0.0;
    double direction_hi = 0.0;

    // Throws DataError on inverted intervals, even/nonpositive widths or
    // directions outside (-90, 90).
    void validate() const;

    bool operator==(const RainRange&) const = default;
};

// One rendered streak. Center is in pixel coordinates (x right, y down) with
// pixel (0,0) centered at (0,0).
struct StreakParams {
    double cx = 0.0;
    double cy = 0.0;
    double length = 0.0;
    int width = 1;
    double angle = 0.0;
    double peak = 0.0;
};

struct RenderedRain {
    RainField field;
    int quantity = 0;  // sampled quantity before area rescaling
    std::vector<StreakParams> streaks;
};

// Streak density is defined on this reference patch area.
inline constexpr int kReferenceSide = 128;
inline constexpr double kPeakLo = 0.25;
inline constexpr double kPeakHi = 0.85;

// "small", "medium" or "large". Throws DataError for anything else.
RainRange preset(std::string_view name);
std::vector<std::string> preset_names();

// Deterministic for (range, height, width, seed). Requires height, width >= 16.
RenderedRain render_rain_logged(const RainRange& range, int height, int width, std::uint64_t seed);
RainField render_rain(const RainRange& range, int height, int width, std::uint64_t seed);

// Max-composites one streak into the canvas. The streak is a line segment
// dilated to the streak width with a transverse Gaussian falloff
// (sigma = width / 4), supersampled 4x4 per pixel.
void draw_streak(RainField& canvas, const StreakParams& streak);

// Unit vector (x, y) along the streak axis, pointing downwards.
std::pair<double, double> streak_axis(double angle_degrees);

struct RainPair {
    Image rainy;
    RainField rain;
};

RainPair make_pair(const Image& background, const RainRange& range, std::uint64_t seed);

// CSV log: header "cx,cy,length,width,angle,peak" then one row per streak.
std::string streaks_to_csv(const std::vector<StreakParams>& streaks);

}  // namespace rainlab::rain
