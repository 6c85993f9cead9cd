#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "rainlab/image.hpp"
#include "rainlab/metrics.hpp"
#include "rainlab/nn.hpp"
#include "rainlab/rain.hpp"

namespace rainlab::mini {

namespace fs = std::filesystem;

// Widths {3}, length [40, 48], direction [45, 60] degrees, quantity [200, 300].
rain::RainRange held_out_range();

struct MiniExperimentConfig {
    int patch_size = 32;
    std::vector<std::size_t> counts{8, 64, 512, 2048};
    rain::RainRange train_range = rain::preset("medium");
    rain::RainRange test_range = held_out_range();
    int iterations = 20000;
    int batch_size = 16;
    double lr = 1e-3;
    int seeds = 1;               // repetitions per cell
    std::size_t test_images = 64;
    double test_fraction = 0.2;  // trailing share of the sorted corpus held out for testing
    double threshold = metrics::kDefaultThreshold;
    std::vector<double> extra_thresholds;  // also scored, for threshold-sensitivity checks
    std::uint64_t seed = 0;

    // Throws Error on bad sizes or unsorted counts, and, when
    // require_disjoint, on test and train direction intervals that overlap.
    void validate(bool require_disjoint = true) const;
};

// Conv2d 3x3 stack, channels 1 -> 32 -> 48 -> 48 -> 48 -> 32 -> 1, leaky
// rectifier between layers, output = input + stack(input). The last layer
// starts at zero, so a fresh model is the identity.
class MiniModel {
public:
    explicit MiniModel(std::uint64_t init_seed);

    ad::Var forward(const ad::Var& input) const;  // (N, 1, H, W)
    std::vector<ad::NamedParameter> parameters() const;
    std::size_t parameter_count() const;

private:
    std::vector<ad::Conv2d> layers_;
};

// Held-out and training background pools from one corpus directory.
struct CorpusSplit {
    std::vector<fs::path> train_sources;
    std::vector<fs::path> test_sources;
};
CorpusSplit split_corpus(const fs::path& corpus_dir, double test_fraction);

struct TestSet {
    std::vector<Image> backgrounds, rainy;
    std::vector<RainField> rain;
};
// Grayscale crops of the held-out sources with held-out rain. Fixed per
// config seed.
TestSet make_test_set(const MiniExperimentConfig& cfg, const CorpusSplit& split);

struct ThresholdScore {
    double threshold = 0.0;
    double rain_removal = 0.0;
    double background_error = 0.0;
};

struct CellResult {
    std::size_t count = 0;
    std::string range;
    int rep = 0;
    bool diverged = false;
    std::string error;
    metrics::EvalReport report;          // at cfg.threshold
    std::vector<ThresholdScore> sweep;   // one per extra threshold
    double train_loss = 0.0;             // L1 on a fixed batch of training samples
    double identity_loss = 0.0;          // L1 of rainy vs clean on the same batch
    std::vector<double> loss_curve;      // mean L1 per 100 iterations
};

using IterationCallback = std::function<void(const CellResult& cell, int iteration, double loss)>;

// Trains one model on `count` backgrounds under `range` and scores it on the
// test set. Numeric divergence is recorded in the result instead of thrown.
CellResult run_cell(const MiniExperimentConfig& cfg, const CorpusSplit& split, const TestSet& test,
                    std::size_t count, const rain::RainRange& range, int rep, const IterationCallback& cb = {});

// One cell per (count, rep) with cfg.train_range.
std::vector<CellResult> run_sweep(const MiniExperimentConfig& cfg, const fs::path& corpus_dir,
                                  const IterationCallback& cb = {});
// One cell per (count, range, rep). Ranges may overlap the test range (the
// large preset covers the held-out directions).
std::vector<CellResult> run_balance(const MiniExperimentConfig& cfg, const fs::path& corpus_dir,
                                    const std::vector<rain::RainRange>& ranges, const IterationCallback& cb = {});

// count,range,rep,E_R,E_B,PSNR,train_loss,identity_loss,diverged
void write_cells_csv(const fs::path& path, const std::vector<CellResult>& cells);
// count,range,rep,threshold,E_R,E_B
void write_threshold_csv(const fs::path& path, const std::vector<CellResult>& cells);
// count,range,mean_E_R,mean_E_B,mean_PSNR,reps (diverged cells excluded)
void write_summary_csv(const fs::path& path, const std::vector<CellResult>& cells);

}  // namespace rainlab::mini
