#include "rainlab/toy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "rainlab/csv.hpp"
#include "rainlab/error.hpp"
#include "rainlab/rng.hpp"

namespace rainlab::toy {

namespace {

constexpr std::size_t kKernel = 9;
constexpr double kSlope = 0.1;
constexpr double kScale = 10.0;  // inputs and targets are divided by this

enum Stream : std::uint64_t { kInit = 1, kData = 2, kShuffle = 3, kModel = 4, kEval = 5 };

// Packs segments[idx[lo..hi)] into (B, 2, L) inputs and (B, 1, L) targets.
void pack(const std::vector<Segment>& segments, const std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi,
          ad::Tensor& input, ad::Tensor& target) {
    const std::size_t b = hi - lo, L = segments[idx[lo]].x.size();
    input = ad::Tensor({b, 2, L});
    target = ad::Tensor({b, 1, L});
    for (std::size_t i = 0; i < b; ++i) {
        const Segment& s = segments[idx[lo + i]];
        for (std::size_t j = 0; j < L; ++j) {
            input[(i * 2) * L + j] = s.x[j] / kScale;
            input[(i * 2 + 1) * L + j] = s.y_noisy[j] / kScale;
            target[i * L + j] = s.y_clean[j] / kScale;
        }
    }
}

}  // namespace

void ToyConfig::validate() const {
    if (order < 1) throw Error("toy: order must be >= 1");
    if (!(noise_std >= 0.0)) throw Error("toy: noise stddev must be >= 0");
    if (segment_length < 1 || grid_size < 2) throw Error("toy: grid and segment sizes must be positive");
    if (segment_length > grid_size) throw Error("toy: segment length exceeds the grid size");
    if (train_segments < 1 || batch_size < 1 || epochs < 0) throw Error("toy: counts must be positive");
    if (!(lr > 0.0)) throw Error("toy: learning rate must be positive");
}

double gt_function(int order, double x) { return 10.0 * std::cos(order * std::numbers::pi / 10.0 * x); }

std::vector<double> dense_grid(int n) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x[i] = -10.0 + 20.0 * i / (n - 1);
    x.back() = 10.0;
    return x;
}

std::vector<Segment> sample_segments(const ToyConfig& cfg) {
    cfg.validate();
    const auto grid = dense_grid(cfg.grid_size);
    Rng rng(derive_seed(cfg.seed, {kData}));
    std::vector<Segment> out(static_cast<std::size_t>(cfg.train_segments));
    const std::size_t L = static_cast<std::size_t>(cfg.segment_length);
    for (auto& s : out) {
        const auto start = static_cast<std::size_t>(rng.uniform_int(0, cfg.grid_size - cfg.segment_length));
        s.x.assign(grid.begin() + start, grid.begin() + start + L);
        s.y_clean.resize(L);
        s.y_noisy.resize(L);
        for (std::size_t j = 0; j < L; ++j) {
            s.y_clean[j] = gt_function(cfg.order, s.x[j]);
            s.y_noisy[j] = s.y_clean[j] + rng.normal(cfg.noise_mean, cfg.noise_std);
        }
    }
    return out;
}

ToyModel::ToyModel(std::uint64_t init_seed) {
    const std::size_t channels[] = {2, 64, 144, 144, 64, 1};
    Rng rng(init_seed);
    for (std::size_t i = 0; i + 1 < std::size(channels); ++i) {
        layers_.emplace_back(channels[i], channels[i + 1], kKernel);
        layers_.back().init_fan_in(rng, kSlope);
    }
}

ad::Var ToyModel::forward(const ad::Var& input) const {
    ad::Var h = input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        h = layers_[i].forward(h);
        if (i + 1 < layers_.size()) h = ad::leaky_relu(h, kSlope);
    }
    return h;
}

std::vector<ad::NamedParameter> ToyModel::parameters() const {
    std::vector<ad::NamedParameter> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        out.push_back({"conv" + std::to_string(i) + ".weight", layers_[i].weight});
        out.push_back({"conv" + std::to_string(i) + ".bias", layers_[i].bias});
    }
    return out;
}

std::size_t ToyModel::parameter_count() const { return ad::count_parameters(parameters()); }

TrainResult train_toy(const ToyConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    const auto segments = sample_segments(cfg);
    TrainResult result{ToyModel(derive_seed(cfg.seed, {kInit})), {}};
    std::vector<ad::Var> vars;
    for (const auto& p : result.model.parameters()) vars.push_back(p.var);
    ad::Adam opt(vars, cfg.lr);

    Rng shuffle(derive_seed(cfg.seed, {kShuffle}));
    std::vector<std::size_t> order(segments.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t B = static_cast<std::size_t>(cfg.batch_size);
    ad::Tensor input, target;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
        double total = 0.0;
        for (std::size_t lo = 0; lo < order.size(); lo += B) {
            const std::size_t hi = std::min(order.size(), lo + B);
            pack(segments, order, lo, hi, input, target);
            const ad::Var loss = ad::l1_loss(result.model.forward(ad::constant(input)), ad::constant(target));
            ad::backward(loss);
            opt.step();
            total += loss.value().item() * static_cast<double>(hi - lo);
        }
        result.loss_curve.push_back(total / static_cast<double>(order.size()));
        if (on_epoch) on_epoch(epoch, result.loss_curve.back(), result.model);
    }
    return result;
}

ToyTrace eval_toy(const ToyModel& model, int order, double noise_mean, double noise_std, std::uint64_t seed,
                  int grid_size, int segment_length) {
    ToyConfig check;
    check.order = order;
    check.noise_std = noise_std;
    check.grid_size = grid_size;
    check.segment_length = segment_length;
    check.validate();

    ToyTrace t;
    t.x = dense_grid(grid_size);
    const std::size_t n = t.x.size(), L = static_cast<std::size_t>(segment_length);
    Rng rng(derive_seed(seed, {kEval}));
    t.clean.resize(n);
    t.noisy.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.clean[i] = gt_function(order, t.x[i]);
        t.noisy[i] = t.clean[i] + rng.normal(noise_mean, noise_std);
    }

    const std::size_t stride = std::max<std::size_t>(1, L / 2);
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + L <= n; s += stride) starts.push_back(s);
    if (starts.back() + L < n) starts.push_back(n - L);

    ad::Tensor input({starts.size(), 2, L});
    for (std::size_t w = 0; w < starts.size(); ++w)
        for (std::size_t j = 0; j < L; ++j) {
            input[(w * 2) * L + j] = t.x[starts[w] + j] / kScale;
            input[(w * 2 + 1) * L + j] = t.noisy[starts[w] + j] / kScale;
        }
    ad::Tensor out;
    {
        ad::NoGradGuard guard;
        out = model.forward(ad::constant(input)).value();
    }

    std::vector<double> acc(n, 0.0), weight(n, 0.0);
    for (std::size_t w = 0; w < starts.size(); ++w)
        for (std::size_t j = 0; j < L; ++j) {
            const double tent = static_cast<double>(std::min(j + 1, L - j));
            acc[starts[w] + j] += tent * out[w * L + j];
            weight[starts[w] + j] += tent;
        }
    t.predicted.resize(n);
    double se = 0.0, bias = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        t.predicted[i] = kScale * acc[i] / weight[i];
        const double d = t.predicted[i] - t.clean[i];
        se += d * d;
        bias += d;
    }
    t.mse = se / static_cast<double>(n);
    t.bias = bias / static_cast<double>(n);
    return t;
}

const std::vector<NoiseSetting>& grid_noise_settings() {
    static const std::vector<NoiseSetting> s{{0.0, 1.0}, {5.0, 3.0}, {10.0, 5.0}};
    return s;
}

std::uint64_t eval_seed(std::uint64_t seed, int test_order, double noise_mean, double noise_std) {
    return derive_seed(seed, {kEval, static_cast<std::uint64_t>(test_order), std::bit_cast<std::uint64_t>(noise_mean),
                              std::bit_cast<std::uint64_t>(noise_std)});
}

GridResult run_grid(const ToyConfig& base, const std::vector<int>& orders, const EpochCallback& on_epoch) {
    GridResult g;
    g.orders = orders;
    for (int o : orders) {
        ToyConfig cfg = base;
        cfg.order = o;
        cfg.seed = derive_seed(base.seed, {kModel, static_cast<std::uint64_t>(o)});
        const TrainResult tr = train_toy(cfg, on_epoch);
        g.loss_curves.push_back(tr.loss_curve);
        for (std::size_t c = 0; c < orders.size(); ++c) {
            GridCell cell{o, "order", orders[c], 0.0, 1.0, {}};
            cell.trace = eval_toy(tr.model, orders[c], 0.0, 1.0, eval_seed(base.seed, orders[c], 0.0, 1.0), base.grid_size,
                                  base.segment_length);
            g.cells.push_back(std::move(cell));
        }
        const auto& noise = grid_noise_settings();
        for (std::size_t c = 0; c < noise.size(); ++c) {
            GridCell cell{o, "noise", o, noise[c].mean, noise[c].stddev, {}};
            cell.trace = eval_toy(tr.model, o, noise[c].mean, noise[c].stddev, eval_seed(base.seed, o, noise[c].mean, noise[c].stddev),
                                  base.grid_size, base.segment_length);
            g.cells.push_back(std::move(cell));
        }
    }
    return g;
}

void write_trace_csv(const std::filesystem::path& path, const ToyTrace& trace) {
    csv::Table t{{"x", "noisy", "clean", "predicted"}, {}};
    for (std::size_t i = 0; i < trace.x.size(); ++i)
        t.add_row({csv::number(trace.x[i]), csv::number(trace.noisy[i]), csv::number(trace.clean[i]),
                   csv::number(trace.predicted[i])});
    csv::write(path, t);
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& loss_curve) {
    csv::Table t{{"epoch", "l1_loss"}, {}};
    for (std::size_t i = 0; i < loss_curve.size(); ++i)
        t.add_row({csv::number(static_cast<long long>(i + 1)), csv::number(loss_curve[i])});
    csv::write(path, t);
}

void write_grid_csv(const std::filesystem::path& path, const GridResult& grid) {
    csv::Table t{{"train_order", "kind", "test_order", "noise_mean", "noise_std", "mse", "bias"}, {}};
    for (const auto& c : grid.cells)
        t.add_row({csv::number(static_cast<long long>(c.train_order)), c.kind,
                   csv::number(static_cast<long long>(c.test_order)), csv::number(c.noise_mean),
                   csv::number(c.noise_std), csv::number(c.trace.mse), csv::number(c.trace.bias)});
    csv::write(path, t);
}

}  // namespace rainlab::toy
