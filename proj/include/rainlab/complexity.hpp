#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rainlab/image.hpp"

namespace rainlab::complexity {

struct ComplexityScore {
    std::vector<double> contributions;  // one per scale, all >= 0
    double total = 0.0;
    int scales = 0;
};

// Level-k coarse graining: 2^k x 2^k block means, replicated back to the
// input resolution. The image is first center-cropped so both sides are
// divisible by 2^k. Throws ShapeError when a side is smaller than 2^k.
Image coarse_grain(const Image& img, int level);

// floor(log2(min(h, w))) - 2
int default_scales(int height, int width);

// Grayscale, zero-mean intensities; O(m, n) = <I_m, I_n> / (h w) over the
// coarse-grained levels; contribution_k = |O(k,k+1) - (O(k,k) + O(k+1,k+1)) / 2|
// for k = 0 .. scales-1. scales <= 0 selects default_scales.
ComplexityScore structural_complexity(const Image& img, int scales = 0);

struct CorpusComplexity {
    ComplexityScore mean;
    std::vector<ComplexityScore> per_patch;
    std::vector<std::string> sources;
};

// Mean score over patches drawn with the dataset builder's crop sampler.
CorpusComplexity corpus_complexity(const std::filesystem::path& corpus_dir, int patch_size, std::size_t sample_count,
                                   std::uint64_t seed, int scales = 0);

}  // namespace rainlab::complexity
