#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>
#include <map>
#include <string>

#include "rainlab/autodiff.hpp"
#include "rainlab/image.hpp"
#include "rainlab/metrics.hpp"
#include "rainlab/rain.hpp"
#include "rainlab/rng.hpp"

namespace testing {

namespace fs = std::filesystem;

// Unique scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "rainlab");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

std::uint64_t file_hash(const fs::path& file);
// relative path -> FNV-1a hash, for every regular file below root
std::map<std::string, std::uint64_t> tree_hashes(const fs::path& root);
std::string read_file(const fs::path& file);

rainlab::Image random_image(rainlab::Rng& rng, int h, int w, int c);
rainlab::ad::Tensor random_tensor(rainlab::Rng& rng, rainlab::ad::Shape shape, double lo = -1.0, double hi = 1.0);

// Central differences of sum(w * f) for a fixed random w against backward(),
// over every element of every input that requires grad. Returns the largest
// |numeric - analytic| / max(1, |numeric|).
double max_gradient_error(std::vector<rainlab::ad::Var> inputs,
                          const std::function<rainlab::ad::Var(const std::vector<rainlab::ad::Var>&)>& f,
                          rainlab::Rng& rng, double h);

// Flat-loop metric oracles: gather the selected squared errors into a list
// first, then take the root of their mean. `want` picks mask value 1 (E_R) or 0 (E_B).
double rms_oracle(const rainlab::Image& a, const rainlab::Image& b, const rainlab::BinaryMask& m, int want);
double psnr_oracle(const rainlab::Image& a, const rainlab::Image& b);

// Renders one logged streak alone on a canvas centered on it and returns the
// principal-axis tilt (degrees from vertical, same sign convention as the
// renderer) of the intensity-weighted pixel support.
double fitted_streak_angle(const rainlab::rain::StreakParams& streak);

}  // namespace testing
