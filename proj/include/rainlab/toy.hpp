#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "rainlab/nn.hpp"

namespace rainlab::toy {

struct ToyConfig {
    int order = 1;
    double noise_mean = 0.0;
    double noise_std = 1.0;
    int grid_size = 2048;  // points over [-10, 10]
    int segment_length = 128;
    int train_segments = 10000;
    int epochs = 50;
    int batch_size = 64;
    double lr = 1e-3;
    std::uint64_t seed = 0;

    // Throws Error on O < 1, sigma < 0, segment longer than the grid, or
    // nonpositive counts.
    void validate() const;
};

struct Segment {
    std::vector<double> x;
    std::vector<double> y_noisy;
    std::vector<double> y_clean;
};

// 10 cos(O pi x / 10)
double gt_function(int order, double x);

// n evenly spaced points from -10 to 10 inclusive.
std::vector<double> dense_grid(int n);

// Each segment is segment_length consecutive grid points from a uniformly
// random start, with its own N(mu, sigma) noise draw.
std::vector<Segment> sample_segments(const ToyConfig& cfg);

// Conv1d stack, kernel 9, channels 2 -> 64 -> 144 -> 144 -> 64 -> 1 with a
// leaky rectifier (slope 0.1) between layers. Input (N, 2, L) holding
// (x/10, y/10); output (N, 1, L) holding y/10. Copies share parameters.
class ToyModel {
public:
    explicit ToyModel(std::uint64_t init_seed);

    ad::Var forward(const ad::Var& input) const;
    std::vector<ad::NamedParameter> parameters() const;
    std::size_t parameter_count() const;

private:
    std::vector<ad::Conv1d> layers_;
};

struct TrainResult {
    ToyModel model;
    std::vector<double> loss_curve;  // mean L1 (normalized units) per epoch
};

// Called after each epoch with the epoch's mean loss and the current model.
using EpochCallback = std::function<void(int epoch, double loss, const ToyModel& model)>;

// Throws NumericError on divergence.
TrainResult train_toy(const ToyConfig& cfg, const EpochCallback& on_epoch = {});

struct ToyTrace {
    std::vector<double> x, noisy, clean, predicted;
    double mse = 0.0;   // original units
    double bias = 0.0;  // mean(predicted - clean)
};

// Whole noisy curve on the dense grid, run as stride-64 windows whose
// overlaps are blended with tent weights.
ToyTrace eval_toy(const ToyModel& model, int order, double noise_mean, double noise_std, std::uint64_t seed,
                  int grid_size = 2048, int segment_length = 128);

struct GridCell {
    int train_order = 0;
    std::string kind;  // "order" (noise fixed N(0,1)) or "noise" (order fixed)
    int test_order = 0;
    double noise_mean = 0.0;
    double noise_std = 0.0;
    ToyTrace trace;
};

struct GridResult {
    std::vector<int> orders;
    std::vector<std::vector<double>> loss_curves;  // one per trained model
    std::vector<GridCell> cells;                   // orders.size() * 6
};

struct NoiseSetting {
    double mean, stddev;
};
const std::vector<NoiseSetting>& grid_noise_settings();  // N(0,1), N(5,3), N(10,5)

// Trains one model per order (noise from base) and evaluates each on every
// order under N(0,1) and on every grid noise setting at its own order.
GridResult run_grid(const ToyConfig& base, const std::vector<int>& orders = {1, 4, 8},
                    const EpochCallback& on_epoch = {});

// Evaluation seed keyed on the test setting, so every model tested on one
// setting sees the same noise and grid cells do not depend on run order.
std::uint64_t eval_seed(std::uint64_t seed, int test_order, double noise_mean, double noise_std);

void write_trace_csv(const std::filesystem::path& path, const ToyTrace& trace);
void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& loss_curve);
// train_order,kind,test_order,noise_mean,noise_std,mse,bias
void write_grid_csv(const std::filesystem::path& path, const GridResult& grid);

}  // namespace rainlab::toy
