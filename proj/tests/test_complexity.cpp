#include <doctest.h>

#include <cmath>

#include "rainlab/complexity.hpp"
#include "rainlab/dataset.hpp"
#include "rainlab/error.hpp"
#include "rainlab/procedural.hpp"
#include "support.hpp"

using namespace rainlab;
using namespace rainlab::complexity;

namespace {

// Block mean over the 2^k x 2^k block containing (y, x), computed directly
// from the source pixels.
double block_mean_oracle(const Image& img, int level, int y, int x) {
    const int b = 1 << level;
    const int y0 = (y / b) * b, x0 = (x / b) * b;
    double s = 0;
    for (int yy = y0; yy < y0 + b; ++yy)
        for (int xx = x0; xx < x0 + b; ++xx) s += img.at(yy, xx);
    return s / (b * b);
}

// Same estimator without mean removal, built from brute-force levels.
double uncentered_total(const Image& img, int scales) {
    std::vector<std::vector<double>> levels;
    for (int k = 0; k <= scales; ++k) {
        std::vector<double> lv;
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) lv.push_back(block_mean_oracle(img, k, y, x));
        levels.push_back(lv);
    }
    auto ov = [&](int a, int b) {
        double s = 0;
        for (std::size_t i = 0; i < levels[a].size(); ++i) s += levels[a][i] * levels[b][i];
        return s / levels[a].size();
    };
    double total = 0;
    for (int k = 0; k < scales; ++k) total += std::abs(ov(k, k + 1) - 0.5 * (ov(k, k) + ov(k + 1, k + 1)));
    return total;
}

Image noise_image(Rng& rng, int n) {
    Image img(n, n, 1);
    for (double& v : img.data) v = rng.uniform();
    return img;
}

// Linear ramp with the same mean (1/2) and variance (1/12) as U(0,1) noise:
// a centered ramp over n*n pixels in raster order.
Image gradient_like(int n) {
    Image img(n, n, 1);
    const double count = static_cast<double>(n) * n;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) img.at(y, x) = (y * n + x + 0.5) / count;
    return img;
}

}  // namespace

TEST_CASE("coarse_grain level 0 is the identity") {
    Rng rng(1);
    const Image img = testing::random_image(rng, 8, 8, 1);
    CHECK(coarse_grain(img, 0) == img);
}

TEST_CASE("coarse_grain keeps constant images fixed") {
    const Image img(16, 16, 1, 0.42);
    for (int k = 0; k <= 4; ++k)
        for (double v : coarse_grain(img, k).data) CHECK(v == doctest::Approx(0.42));
}

TEST_CASE("coarse_grain matches block means") {
    Image img(4, 4, 1);
    for (int i = 0; i < 16; ++i) img.data[i] = i;  // 0..15 row-major
    const Image c = coarse_grain(img, 1);
    CHECK(c.at(0, 0) == doctest::Approx(2.5));   // (0+1+4+5)/4
    CHECK(c.at(0, 3) == doctest::Approx(4.5));   // (2+3+6+7)/4
    CHECK(c.at(3, 0) == doctest::Approx(10.5));  // (8+9+12+13)/4
    CHECK(c.at(2, 2) == doctest::Approx(12.5));  // (10+11+14+15)/4
    Rng rng(2);
    const Image r = testing::random_image(rng, 16, 16, 1);
    for (int k = 0; k <= 3; ++k) {
        const Image cg = coarse_grain(r, k);
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) CHECK(cg.at(y, x) == doctest::Approx(block_mean_oracle(r, k, y, x)).epsilon(1e-12));
    }
}

TEST_CASE("coarse_grain center-crops and rejects undersized images") {
    const Image img(10, 7, 1, 0.1);
    const Image c = coarse_grain(img, 2);
    CHECK(c.height == 8);
    CHECK(c.width == 4);
    CHECK_THROWS_AS(coarse_grain(Image(3, 8, 1), 2), ShapeError);
}

TEST_CASE("structural complexity of a constant image is zero") {
    const auto s = structural_complexity(Image(64, 64, 3, 0.3));
    CHECK(s.total == doctest::Approx(0.0).scale(1).epsilon(1e-15));
    CHECK(s.scales == default_scales(64, 64));
    CHECK(default_scales(64, 64) == 4);
    CHECK(default_scales(128, 100) == 4);
}

TEST_CASE("contributions are nonnegative and sum to the total") {
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        Image img = procedural_background(64, 64, 1, rng);
        const auto s = structural_complexity(img);
        double sum = 0;
        for (double c : s.contributions) {
            CHECK(c >= 0.0);
            sum += c;
        }
        CHECK(sum == doctest::Approx(s.total));
    }
}

TEST_CASE("noise is more complex than an equal-variance gradient in 100 of 100 trials") {
    const Image ramp = gradient_like(64);
    const double ramp_score = structural_complexity(ramp).total;
    const double ramp_uncentered = uncentered_total(ramp, 4);
    int wins = 0, wins_uncentered = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        const Image n = noise_image(rng, 64);
        wins += structural_complexity(n).total > ramp_score;
        wins_uncentered += uncentered_total(n, 4) > ramp_uncentered;
    }
    CHECK(wins == 100);
    // ordering does not depend on the mean removal
    CHECK(wins_uncentered == 100);
}

TEST_CASE("complexity is invariant to a global intensity shift") {
    Rng rng(4);
    Image img = testing::random_image(rng, 32, 32, 1);
    for (double& v : img.data) v *= 0.5;
    Image shifted = img;
    for (double& v : shifted.data) v += 0.3;
    CHECK(structural_complexity(shifted).total == doctest::Approx(structural_complexity(img).total).epsilon(1e-10));
}

TEST_CASE("degenerate sizes are rejected") {
    CHECK_THROWS_AS(structural_complexity(Image(8, 8, 1)), ShapeError);  // 1 default scale
    CHECK_THROWS_AS(structural_complexity(Image(16, 16, 1), 5), ShapeError);
}

TEST_CASE("corpus complexity") {
    testing::TempDir dir;
    std::filesystem::create_directories(dir / "flat");
    for (int i = 0; i < 3; ++i) save_image(Image(40, 40, 1, 0.5), dir / "flat" / (std::to_string(i) + ".png"));
    CHECK(corpus_complexity(dir / "flat", 32, 5, 1).mean.total == doctest::Approx(0.0).scale(1));

    write_procedural_corpus(dir / "tex", 4, 48, 48, 1, 6);
    const auto one = corpus_complexity(dir / "tex", 32, 1, 9);
    const auto patches = dataset::extract_patches(dir / "tex", 32, 1, 9);
    CHECK(one.mean.total == doctest::Approx(structural_complexity(patches[0].image).total).epsilon(1e-12));

    const auto a = corpus_complexity(dir / "tex", 32, 6, 2);
    const auto b = corpus_complexity(dir / "tex", 32, 6, 2);
    CHECK(a.mean.total == b.mean.total);
}
