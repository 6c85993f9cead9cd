#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "rainlab/dataset.hpp"
#include "rainlab/error.hpp"
#include "rainlab/procedural.hpp"
#include "rainlab/sharpness.hpp"
#include "support.hpp"

using namespace rainlab;
namespace fs = std::filesystem;

namespace {

// Direct 3x3 Laplacian with clamped indices, then population variance.
double sharpness_oracle(const Image& gray) {
    const int h = gray.height, w = gray.width;
    const int k[3][3] = {{0, 1, 0}, {1, -4, 1}, {0, 1, 0}};
    std::vector<double> r;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int yy = std::min(std::max(y + dy, 0), h - 1);
                    const int xx = std::min(std::max(x + dx, 0), w - 1);
                    acc += k[dy + 1][dx + 1] * 255.0 * gray.at(yy, xx);
                }
            r.push_back(acc);
        }
    double mean = 0;
    for (double v : r) mean += v;
    mean /= r.size();
    double var = 0;
    for (double v : r) var += (v - mean) * (v - mean);
    return var / r.size();
}

Image checkerboard(int n) {
    Image img(n, n, 1);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) img.at(y, x) = (x + y) % 2 ? 1.0 : 0.0;
    return img;
}

// Half smooth gradients, half textured backgrounds.
void write_mixed_corpus(const fs::path& dir, int count, int side) {
    fs::create_directories(dir);
    Rng rng(77);
    for (int i = 0; i < count; ++i) {
        Image img(side, side, 1);
        if (i % 2 == 0) {
            const double a = rng.uniform(0.2, 0.6);
            for (int y = 0; y < side; ++y)
                for (int x = 0; x < side; ++x) img.at(y, x) = a + 0.002 * x;
        } else {
            img = procedural_background(side, side, 1, rng);
            for (double& v : img.data) v = std::clamp(v + 0.2 * rng.normal(), 0.0, 1.0);
        }
        char name[32];
        std::snprintf(name, sizeof name, "img%03d.png", i);
        save_image(img, dir / name);
    }
}

}  // namespace

TEST_CASE("sharpness of a constant image is zero") {
    CHECK(sharpness(Image(10, 12, 3, 0.37)) == 0.0);
}

TEST_CASE("sharpness of an 8x8 checkerboard matches the brute-force oracle") {
    const Image board = checkerboard(8);
    const double oracle = sharpness_oracle(board);
    // interior +-1020 (36 px), edges +-765 (24 px), corners +-510 (4 px), zero mean
    CHECK(oracle == doctest::Approx(820940.625).epsilon(1e-12));
    CHECK(sharpness(board) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("sharpness matches the oracle on random images") {
    Rng rng(8);
    for (int t = 0; t < 20; ++t) {
        const Image img = testing::random_image(rng, 5 + t % 7, 4 + t % 5, t % 2 ? 3 : 1);
        CHECK(sharpness(img) == doctest::Approx(sharpness_oracle(to_grayscale(img))).epsilon(1e-12));
    }
}

TEST_CASE("sharpness scales quadratically with intensity") {
    Rng rng(9);
    Image img = testing::random_image(rng, 16, 16, 1);
    for (double& v : img.data) v *= 0.5;
    Image doubled = img;
    for (double& v : doubled.data) v *= 2.0;
    CHECK(sharpness(doubled) == doctest::Approx(4.0 * sharpness(img)).epsilon(1e-12));
}

TEST_CASE("sharpness bins") {
    CHECK(bin_name(10.0) == "low");
    CHECK(bin_name(49.9) == "low");
    CHECK(bin_name(50.0) == "none");
    CHECK(bin_name(499.0) == "none");
    CHECK(bin_name(500.0) == "medium");
    CHECK(bin_name(750.0) == "medium");
    CHECK(bin_name(1000.0) == "medium");
    CHECK(bin_name(3000.0) == "none");
    CHECK(bin_name(5000.0) == "none");
    CHECK(bin_name(6000.0) == "high");
    CHECK(parse_bin("high") == SharpnessBin::high);
    CHECK_THROWS_AS(parse_bin("blurry"), DataError);
}

TEST_CASE("extract_patches count contracts") {
    testing::TempDir dir;
    write_procedural_corpus(dir / "corpus", 4, 40, 40, 1, 3);
    CHECK(dataset::extract_patches(dir / "corpus", 16, 0, 1).empty());

    const auto a = dataset::extract_patches(dir / "corpus", 16, 8, 5);
    const auto b = dataset::extract_patches(dir / "corpus", 16, 8, 5);
    REQUIRE(a.size() == 8);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].image == b[i].image);
        CHECK(a[i].source == b[i].source);
        CHECK(a[i].y == b[i].y);
        CHECK(a[i].x == b[i].x);
        CHECK(a[i].image.height == 16);
    }
}

TEST_CASE("extract_patches errors on unusable corpora") {
    testing::TempDir dir;
    fs::create_directories(dir / "empty");
    CHECK_THROWS_AS(dataset::extract_patches(dir / "empty", 16, 1, 0), DataError);
    write_procedural_corpus(dir / "small", 2, 12, 12, 1, 0);
    CHECK_THROWS_AS(dataset::extract_patches(dir / "small", 16, 1, 0), DataError);
    CHECK_THROWS_AS(dataset::extract_patches(dir / "nowhere", 16, 1, 0), IoError);
}

TEST_CASE("30000 patches from a 100-image corpus never repeat a crop") {
    testing::TempDir dir;
    write_procedural_corpus(dir / "corpus", 100, 48, 48, 1, 21);
    const auto patches = dataset::extract_patches(dir / "corpus", 16, 30000, 4);
    REQUIRE(patches.size() == 30000);
    std::set<std::tuple<std::string, int, int>> seen;
    for (const auto& p : patches) seen.emplace(p.source, p.y, p.x);
    CHECK(seen.size() == 30000);
}

TEST_CASE("crop sampler repeats only after exhausting distinct crops") {
    dataset::CropSampler sampler({{18, 17, 1}}, 16, 3);  // 3 x 2 = 6 distinct crops
    CHECK(sampler.total_distinct() == 6);
    std::set<std::tuple<int, int>> seen;
    for (int i = 0; i < 6; ++i) {
        const auto c = sampler.next_distinct();
        REQUIRE(c.has_value());
        seen.emplace(c->y, c->x);
    }
    CHECK(seen.size() == 6);
    CHECK_FALSE(sampler.next_distinct().has_value());
    const auto extra = sampler.next();
    CHECK(extra.y <= 2);
    CHECK(extra.x <= 1);
}

TEST_CASE("build_dataset writes consistent triples and a manifest") {
    testing::TempDir dir;
    write_procedural_corpus(dir / "corpus", 5, 64, 64, 3, 2);
    dataset::BuildOptions opts;
    opts.corpus_dir = dir / "corpus";
    opts.out_dir = dir / "out";
    opts.id = "tiny";
    opts.patch_size = 32;
    opts.count = 8;
    opts.seed = 12;
    const auto m = dataset::build_dataset(opts);
    REQUIRE(m.entries.size() == 8);
    std::set<std::uint64_t> seeds;
    for (const auto& e : m.entries) seeds.insert(e.seed);
    CHECK(seeds.size() == 8);

    const fs::path ds = dir / "out" / "tiny";
    CHECK(fs::exists(ds / "manifest.json"));
    for (const auto& e : m.entries) {
        const Image bg = load_image(dataset::background_path(ds, e.stem));
        const Image rainy = load_image(dataset::rainy_path(ds, e.stem));
        const RainField r = load_rain(dataset::rain_path(ds, e.stem));
        const Image expect = compose(bg, r);
        double worst = 0.0;
        for (std::size_t i = 0; i < expect.data.size(); ++i) worst = std::max(worst, std::abs(expect.data[i] - rainy.data[i]));
        CHECK(worst <= 1.0 / 255.0);
        CHECK(quantized(expect) == rainy);
        CHECK(sharpness(bg) == doctest::Approx(e.sharpness).epsilon(1e-12));
        CHECK(e.bin == bin_name(e.sharpness));
    }

    const auto loaded = dataset::load_manifest(ds / "manifest.json");
    CHECK(dataset::to_json(loaded) == dataset::to_json(m));
}

TEST_CASE("rebuilding from the manifest alone is byte identical") {
    testing::TempDir dir;
    write_procedural_corpus(dir / "corpus", 3, 48, 48, 1, 8);
    dataset::BuildOptions opts;
    opts.corpus_dir = dir / "corpus";
    opts.out_dir = dir / "first";
    opts.id = "d";
    opts.patch_size = 24;
    opts.count = 6;
    opts.range = rain::preset("large");
    opts.seed = 1;
    dataset::build_dataset(opts);
    const auto m = dataset::load_manifest(dir / "first" / "d" / "manifest.json");
    dataset::materialize(m, dir / "second");
    dataset::save_manifest(m, dir / "second" / "manifest.json");
    CHECK(testing::tree_hashes(dir / "first" / "d") == testing::tree_hashes(dir / "second"));
}

TEST_CASE("sharpness-binned builds respect the bin") {
    testing::TempDir dir;
    write_mixed_corpus(dir / "corpus", 10, 48);
    dataset::BuildOptions opts;
    opts.corpus_dir = dir / "corpus";
    opts.out_dir = dir / "out";
    opts.id = "low";
    opts.patch_size = 32;
    opts.count = 12;
    opts.sharpness_bin = SharpnessBin::low;
    const auto m = dataset::build_dataset(opts);
    REQUIRE(m.entries.size() == 12);
    for (const auto& e : m.entries) {
        CHECK(e.bin == "low");
        CHECK(sharpness(load_image(dataset::background_path(dir / "out" / "low", e.stem))) < kLowSharpnessMax);
    }

    opts.id = "high";
    opts.sharpness_bin = SharpnessBin::high;
    const auto mh = dataset::build_dataset(opts);
    for (const auto& e : mh.entries) CHECK(e.sharpness > kHighSharpnessMin);
}

TEST_CASE("binned builds report the shortfall") {
    testing::TempDir dir;
    write_mixed_corpus(dir / "corpus", 2, 34);  // one smooth image: 9 low crops
    dataset::BuildOptions opts;
    opts.corpus_dir = dir / "corpus";
    opts.out_dir = dir / "out";
    opts.patch_size = 32;
    opts.count = 20;
    opts.sharpness_bin = SharpnessBin::low;
    try {
        dataset::build_dataset(opts);
        FAIL("expected a shortfall error");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("need 20") != std::string::npos);
        CHECK(msg.find("found 9") != std::string::npos);
    }
}
