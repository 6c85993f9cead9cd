#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rainlab/autodiff.hpp"
#include "rainlab/rng.hpp"

namespace rainlab::ad {

// Same-padded, stride-1 convolution over one spatial axis.
class Conv1d {
public:
    Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel);

    Var forward(const Var& x) const { return conv1d(x, weight, bias); }
    std::size_t parameter_count() const { return weight.value().size() + bias.value().size(); }

    // Kaiming-uniform weights for a leaky rectifier with the given slope;
    // zero bias.
    void init_fan_in(Rng& rng, double slope = 0.1);
    void init_zero();

    Var weight;
    Var bias;
};

// Same-padded, stride-1 convolution over two spatial axes.
class Conv2d {
public:
    Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_h, std::size_t kernel_w);

    Var forward(const Var& x) const { return conv2d(x, weight, bias); }
    std::size_t parameter_count() const { return weight.value().size() + bias.value().size(); }

    void init_fan_in(Rng& rng, double slope = 0.1);
    void init_zero();

    Var weight;
    Var bias;
};

struct NamedParameter {
    std::string name;
    Var var;
};

std::size_t count_parameters(const std::vector<NamedParameter>& params);

// Bias-corrected Adam. step() consumes the accumulated gradients and clears
// them.
class Adam {
public:
    explicit Adam(std::vector<Var> params, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);

    // Throws Error if a parameter has no gradient.
    void step();
    void zero_grad();

    std::int64_t steps() const { return step_; }
    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }
    const std::vector<Tensor>& first_moments() const { return m_; }
    const std::vector<Tensor>& second_moments() const { return v_; }

private:
    std::vector<Var> params_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    double lr_, beta1_, beta2_, eps_;
    std::int64_t step_ = 0;
};

// Little-endian binary checkpoint:
//   "RLCKPT\0\0" | u32 version (1) | u32 block count |
//   per block: u32 name length | name bytes | u32 rank | u64 dims[rank] | f64 values[prod(dims)]
void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedParameter>& params);
// Loads values into existing parameters by name; shapes must match.
void load_checkpoint(const std::filesystem::path& path, const std::vector<NamedParameter>& params);

}  // namespace rainlab::ad
