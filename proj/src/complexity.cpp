#include "rainlab/complexity.hpp"

#include <bit>
#include <cmath>

#include "rainlab/dataset.hpp"
#include "rainlab/error.hpp"
#include "rainlab/metrics.hpp"

namespace rainlab::complexity {

namespace {

Image center_crop_to_multiple(const Image& img, int block) {
    const int h = img.height - img.height % block;
    const int w = img.width - img.width % block;
    return crop(img, (img.height - h) / 2, (img.width - w) / 2, h, w);
}

double overlap(const Image& a, const Image& b) {
    metrics::CompensatedSum acc;
    for (std::size_t i = 0; i < a.data.size(); ++i) acc.add(a.data[i] * b.data[i]);
    return acc.value() / static_cast<double>(a.pixel_count());
}

}  // namespace

Image coarse_grain(const Image& img, int level) {
    if (level < 0) throw ShapeError("coarse_grain: negative level");
    const int block = 1 << level;
    if (img.height < block || img.width < block) {
        throw ShapeError("coarse_grain: image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                         " is smaller than 2^" + std::to_string(level));
    }
    Image base = center_crop_to_multiple(img, block);
    if (level == 0) return base;
    Image out = base;
    const int c = base.channels;
    const double inv = 1.0 / (static_cast<double>(block) * block);
    for (int by = 0; by < base.height; by += block) {
        for (int bx = 0; bx < base.width; bx += block) {
            for (int k = 0; k < c; ++k) {
                double s = 0.0;
                for (int y = by; y < by + block; ++y)
                    for (int x = bx; x < bx + block; ++x) s += base.at(y, x, k);
                const double mean = s * inv;
                for (int y = by; y < by + block; ++y)
                    for (int x = bx; x < bx + block; ++x) out.at(y, x, k) = mean;
            }
        }
    }
    return out;
}

int default_scales(int height, int width) {
    const int m = std::min(height, width);
    if (m <= 0) return 0;
    return static_cast<int>(std::bit_width(static_cast<unsigned>(m))) - 1 - 2;
}

ComplexityScore structural_complexity(const Image& img, int scales) {
    if (scales <= 0) scales = default_scales(img.height, img.width);
    if (scales < 2) {
        throw ShapeError("structural_complexity: image " + std::to_string(img.height) + "x" +
                         std::to_string(img.width) + " supports fewer than 2 scales");
    }
    if (std::min(img.height, img.width) < (1 << scales)) {
        throw ShapeError("structural_complexity: image too small for " + std::to_string(scales) + " scales");
    }
    // Crop once for the coarsest level so every level shares one grid.
    Image gray = center_crop_to_multiple(to_grayscale(img), 1 << scales);
    double mean = 0.0;
    for (double v : gray.data) mean += v;
    mean /= static_cast<double>(gray.data.size());
    for (double& v : gray.data) v -= mean;

    std::vector<Image> levels;
    levels.reserve(static_cast<std::size_t>(scales) + 1);
    for (int k = 0; k <= scales; ++k) levels.push_back(coarse_grain(gray, k));

    ComplexityScore score;
    score.scales = scales;
    for (int k = 0; k < scales; ++k) {
        const double cross = overlap(levels[k], levels[k + 1]);
        const double self_k = overlap(levels[k], levels[k]);
        const double self_k1 = overlap(levels[k + 1], levels[k + 1]);
        const double c = std::abs(cross - 0.5 * (self_k + self_k1));
        score.contributions.push_back(c);
        score.total += c;
    }
    return score;
}

CorpusComplexity corpus_complexity(const std::filesystem::path& corpus_dir, int patch_size, std::size_t sample_count,
                                   std::uint64_t seed, int scales) {
    if (sample_count == 0) throw DataError("corpus_complexity: sample_count must be positive");
    const auto patches = dataset::extract_patches(corpus_dir, patch_size, sample_count, seed);
    CorpusComplexity out;
    for (const auto& p : patches) {
        out.per_patch.push_back(structural_complexity(p.image, scales));
        out.sources.push_back(p.source);
    }
    const std::size_t n_scales = out.per_patch.front().contributions.size();
    out.mean.scales = out.per_patch.front().scales;
    out.mean.contributions.assign(n_scales, 0.0);
    for (std::size_t k = 0; k < n_scales; ++k) {
        metrics::CompensatedSum s;
        for (const auto& c : out.per_patch) s.add(c.contributions[k]);
        out.mean.contributions[k] = s.value() / static_cast<double>(out.per_patch.size());
    }
    metrics::CompensatedSum t;
    for (double c : out.mean.contributions) t.add(c);
    out.mean.total = t.value();
    return out;
}

}  // namespace rainlab::complexity
