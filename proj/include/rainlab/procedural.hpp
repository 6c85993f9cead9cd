#pragma once

#include <cstdint>
#include <filesystem>

#include "rainlab/image.hpp"
#include "rainlab/rng.hpp"

namespace rainlab {

// Synthetic textured background: a smooth gradient, a few oriented gratings,
// flat shapes with hard edges and mild grain. Used when no photographic
// corpus is available (tests, demos).
Image procedural_background(int height, int width, int channels, Rng& rng);

// Writes `count` backgrounds as NNNNNN.png into dir. Deterministic under seed.
void write_procedural_corpus(const std::filesystem::path& dir, int count, int height, int width, int channels,
                             std::uint64_t seed);

}  // namespace rainlab
