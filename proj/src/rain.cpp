#include "rainlab/rain.hpp"

#include <algorithm>
#include <cmath>
#include <vector>
#include <numbers>
#include <sstream>

#include "rainlab/error.hpp"
#include "rainlab/rng.hpp"

namespace rainlab::rain {

void RainRange::validate() const {
    if (quantity_lo < 0 || quantity_lo > quantity_hi) throw DataError("rain range '" + name + "': bad quantity interval");
    if (widths.empty()) throw DataError("rain range '" + name + "': no widths");
    for (int w : widths) {
        if (w < 1 || w % 2 == 0) throw DataError("rain range '" + name + "': widths must be odd and >= 1");
    }
    if (!(length_lo > 0.0) || length_lo > length_hi) throw DataError("rain range '" + name + "': bad length interval");
    if (direction_lo > direction_hi || direction_lo <= -90.0 || direction_hi >= 90.0) {
        throw DataError("rain range '" + name + "': direction must lie in (-90, 90) degrees");
    }
}

RainRange preset(std::string_view name) {
    if (name == "small") return {"small", 200, 300, {5}, 30.0, 31.0, -5.0, 5.0};
    if (name == "medium") return {"medium", 200, 300, {5, 7, 9}, 20.0, 40.0, -30.0, 30.0};
    if (name == "large") return {"large", 200, 300, {1, 3, 5, 7, 9}, 5.0, 60.0, -70.0, 70.0};
    throw DataError("unknown rain preset '" + std::string(name) + "' (expected small, medium or large)");
}

std::vector<std::string> preset_names() { return {"small", "medium", "large"}; }

std::pair<double, double> streak_axis(double angle_degrees) {
    const double a = angle_degrees * std::numbers::pi / 180.0;
    return {-std::sin(a), std::cos(a)};
}

void draw_streak(RainField& canvas, const StreakParams& s) {
    const auto [ux, uy] = streak_axis(s.angle);
    const double half = 0.5 * s.length;
    const double radius = 0.5 * s.width;
    const double sigma = s.width / 4.0;
    const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);

    const double ax = s.cx - half * ux, ay = s.cy - half * uy;
    const double bx = s.cx + half * ux, by = s.cy + half * uy;
    const double reach = radius + 2.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(ax, bx) - reach)));
    const int x1 = std::min(canvas.width - 1, static_cast<int>(std::ceil(std::max(ax, bx) + reach)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(ay, by) - reach)));
    const int y1 = std::min(canvas.height - 1, static_cast<int>(std::ceil(std::max(ay, by) + reach)));

    // squared distance from (px, py) to the segment
    auto dist2 = [&](double px, double py) {
        const double rx = px - s.cx, ry = py - s.cy;
        double along = rx * ux + ry * uy;
        along = std::clamp(along, -half, half);
        const double dx = rx - along * ux, dy = ry - along * uy;
        return dx * dx + dy * dy;
    };

    // Tent pixel filter (radius 1 px) sampled at spacing <= sigma / 2. A box
    // filter snaps sub-pixel lines to the pixel grid and skews their axis.
    const int kSub = std::max(4, static_cast<int>(std::ceil(2.0 / sigma)));
    const int taps = 2 * kSub;
    std::vector<double> offset(taps), weight(taps);
    double wsum = 0.0;
    for (int i = 0; i < taps; ++i) {
        offset[i] = -1.0 + (i + 0.5) / kSub;
        weight[i] = 1.0 - std::abs(offset[i]);
        wsum += weight[i];
    }
    const double norm = 1.0 / (wsum * wsum);
    const double radius2 = radius * radius;
    const double skip2 = (radius + 1.5) * (radius + 1.5);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            if (dist2(x, y) > skip2) continue;
            double acc = 0.0;
            for (int sy = 0; sy < taps; ++sy) {
                const double py = y + offset[sy];
                for (int sx = 0; sx < taps; ++sx) {
                    const double d2 = dist2(x + offset[sx], py);
                    if (d2 <= radius2) acc += weight[sy] * weight[sx] * std::exp(-d2 * inv_two_sigma2);
                }
            }
            const double v = s.peak * acc * norm;
            double& dst = canvas.at(y, x);
            dst = std::max(dst, v);
        }
    }
}

RenderedRain render_rain_logged(const RainRange& range, int height, int width, std::uint64_t seed) {
    range.validate();
    if (height < 16 || width < 16) throw ShapeError("render_rain: height and width must be >= 16");

    RenderedRain out;
    out.field = RainField(height, width);
    Rng rng(derive_seed(seed, {0x5241494EULL}));
    out.quantity = static_cast<int>(rng.uniform_int(range.quantity_lo, range.quantity_hi));
    const double area_scale =
        static_cast<double>(height) * width / (static_cast<double>(kReferenceSide) * kReferenceSide);
    const auto count = static_cast<int>(std::lround(out.quantity * area_scale));

    out.streaks.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        StreakParams s;
        s.cx = rng.uniform(-0.5, width - 0.5);
        s.cy = rng.uniform(-0.5, height - 0.5);
        s.length = rng.uniform(range.length_lo, range.length_hi);
        s.width = range.widths[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(range.widths.size()) - 1))];
        s.angle = rng.uniform(range.direction_lo, range.direction_hi);
        s.peak = rng.uniform(kPeakLo, kPeakHi);
        draw_streak(out.field, s);
        out.streaks.push_back(s);
    }
    return out;
}

RainField render_rain(const RainRange& range, int height, int width, std::uint64_t seed) {
    return render_rain_logged(range, height, width, seed).field;
}

RainPair make_pair(const Image& background, const RainRange& range, std::uint64_t seed) {
    RainPair p;
    p.rain = render_rain(range, background.height, background.width, seed);
    p.rainy = compose(background, p.rain);
    return p;
}

std::string streaks_to_csv(const std::vector<StreakParams>& streaks) {
    std::ostringstream os;
    os.precision(17);
    os << "cx,cy,length,width,angle,peak\n";
    for (const auto& s : streaks) {
        os << s.cx << ',' << s.cy << ',' << s.length << ',' << s.width << ',' << s.angle << ',' << s.peak << '\n';
    }
    return os.str();
}

}  // namespace rainlab::rain
