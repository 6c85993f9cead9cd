#include "rainlab/procedural.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "rainlab/error.hpp"

namespace rainlab {

Image procedural_background(int height, int width, int channels, Rng& rng) {
    Image img(height, width, channels);
    const double pi = std::numbers::pi;
    for (int c = 0; c < channels; ++c) {
        const double base = rng.uniform(0.2, 0.6);
        const double gx = rng.uniform(-0.3, 0.3) / width, gy = rng.uniform(-0.3, 0.3) / height;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) img.at(y, x, c) = base + gx * x + gy * y;
    }
    const int gratings = static_cast<int>(rng.uniform_int(1, 3));
    for (int g = 0; g < gratings; ++g) {
        const double theta = rng.uniform(0.0, pi);
        const double period = rng.uniform(3.0, 24.0);
        const double amp = rng.uniform(0.03, 0.15);
        const double phase = rng.uniform(0.0, 2.0 * pi);
        const double kx = std::cos(theta) * 2.0 * pi / period, ky = std::sin(theta) * 2.0 * pi / period;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const double v = amp * std::sin(kx * x + ky * y + phase);
                for (int c = 0; c < channels; ++c) img.at(y, x, c) += v;
            }
    }
    const int shapes = static_cast<int>(rng.uniform_int(2, 8));
    for (int s = 0; s < shapes; ++s) {
        const bool disc = rng.uniform() < 0.5;
        const double cx = rng.uniform(0.0, width), cy = rng.uniform(0.0, height);
        const double rx = rng.uniform(2.0, width / 3.0), ry = rng.uniform(2.0, height / 3.0);
        double shade[3];
        for (double& v : shade) v = rng.uniform(0.05, 0.8);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const double dx = (x - cx) / rx, dy = (y - cy) / ry;
                const bool inside = disc ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
                if (!inside) continue;
                for (int c = 0; c < channels; ++c) img.at(y, x, c) = shade[channels == 3 ? c : 0];
            }
    }
    const double grain = rng.uniform(0.0, 0.03);
    for (double& v : img.data) v += grain * rng.normal();
    return clipped(std::move(img));
}

void write_procedural_corpus(const std::filesystem::path& dir, int count, int height, int width, int channels,
                             std::uint64_t seed) {
    if (count <= 0) throw DataError("procedural corpus: count must be positive");
    std::filesystem::create_directories(dir);
    for (int i = 0; i < count; ++i) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
        char name[32];
        std::snprintf(name, sizeof name, "%06d.png", i);
        save_image(procedural_background(height, width, channels, rng), dir / name);
    }
}

}  // namespace rainlab
