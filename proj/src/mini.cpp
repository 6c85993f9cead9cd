#include "rainlab/mini.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rainlab/csv.hpp"
#include "rainlab/dataset.hpp"
#include "rainlab/error.hpp"
#include "rainlab/rng.hpp"

namespace rainlab::mini {

namespace {

constexpr double kSlope = 0.1;
constexpr int kCurveWindow = 100;
constexpr std::size_t kProbeBatch = 64;

enum Stream : std::uint64_t { kInit = 1, kPool = 2, kDraw = 3, kRain = 4, kTest = 5, kProbe = 6, kCell = 7 };

std::uint64_t name_key(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
    return h;
}

ad::Tensor stack(const std::vector<const Image*>& images) {
    const auto h = static_cast<std::size_t>(images.front()->height), w = static_cast<std::size_t>(images.front()->width);
    ad::Tensor t({images.size(), 1, h, w});
    for (std::size_t i = 0; i < images.size(); ++i) std::copy(images[i]->data.begin(), images[i]->data.end(), t.storage().begin() + i * h * w);
    return t;
}

double l1(const ad::Tensor& a, const ad::Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

struct Sample {
    Image clean, rainy;
};

Sample draw_sample(const std::vector<Image>& pool, const rain::RainRange& range, Rng& pick, std::uint64_t rain_seed) {
    const Image& bg = pool[static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
    const RainField r = rain::render_rain(range, bg.height, bg.width, rain_seed);
    return {bg, compose(bg, r)};
}

std::vector<Image> background_pool(const std::vector<fs::path>& sources, int patch, std::size_t count, std::uint64_t seed) {
    std::vector<Image> pool;
    for (auto& p : dataset::extract_patches(sources, patch, count, seed)) pool.push_back(to_grayscale(p.image));
    return pool;
}

Image predict_one(const MiniModel& model, const Image& rainy) {
    ad::NoGradGuard guard;
    const ad::Tensor out = model.forward(ad::constant(stack({&rainy}))).value();
    Image img(rainy.height, rainy.width, 1);
    std::copy(out.storage().begin(), out.storage().end(), img.data.begin());
    return clipped(std::move(img));
}

}  // namespace

rain::RainRange held_out_range() {
    rain::RainRange r;
    r.name = "heldout";
    r.quantity_lo = 200;
    r.quantity_hi = 300;
    r.widths = {3};
    r.length_lo = 40;
    r.length_hi = 48;
    r.direction_lo = 45;
    r.direction_hi = 60;
    return r;
}

void MiniExperimentConfig::validate(bool require_disjoint) const {
    if (patch_size < 16) throw Error("mini: patch size must be at least 16");
    if (iterations < 0 || batch_size < 1 || seeds < 1 || test_images < 1) throw Error("mini: counts must be positive");
    if (!(lr > 0.0)) throw Error("mini: learning rate must be positive");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error("mini: test fraction must lie in (0, 1)");
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) throw Error("mini: background counts must be positive");
        if (i && counts[i] <= counts[i - 1]) throw Error("mini: background counts must be strictly ascending");
    }
    train_range.validate();
    test_range.validate();
    if (require_disjoint && test_range.direction_lo <= train_range.direction_hi && train_range.direction_lo <= test_range.direction_hi)
        throw Error("mini: test rain direction interval overlaps the training range '" + train_range.name + "'");
}

MiniModel::MiniModel(std::uint64_t init_seed) {
    const std::size_t channels[] = {1, 32, 48, 48, 48, 32, 1};
    Rng rng(init_seed);
    for (std::size_t i = 0; i + 1 < std::size(channels); ++i) {
        layers_.emplace_back(channels[i], channels[i + 1], 3, 3);
        layers_.back().init_fan_in(rng, kSlope);
    }
    layers_.back().init_zero();
}

ad::Var MiniModel::forward(const ad::Var& input) const {
    ad::Var h = input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        h = layers_[i].forward(h);
        if (i + 1 < layers_.size()) h = ad::leaky_relu(h, kSlope);
    }
    return ad::add(input, h);
}

std::vector<ad::NamedParameter> MiniModel::parameters() const {
    std::vector<ad::NamedParameter> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        out.push_back({"conv" + std::to_string(i) + ".weight", layers_[i].weight});
        out.push_back({"conv" + std::to_string(i) + ".bias", layers_[i].bias});
    }
    return out;
}

std::size_t MiniModel::parameter_count() const { return ad::count_parameters(parameters()); }

CorpusSplit split_corpus(const fs::path& corpus_dir, double test_fraction) {
    const auto files = dataset::list_corpus(corpus_dir);
    if (files.size() < 2) throw DataError("mini: corpus needs at least two images to hold one out");
    auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(files.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, files.size() - 1);
    CorpusSplit s;
    s.train_sources.assign(files.begin(), files.end() - static_cast<std::ptrdiff_t>(n_test));
    s.test_sources.assign(files.end() - static_cast<std::ptrdiff_t>(n_test), files.end());
    return s;
}

TestSet make_test_set(const MiniExperimentConfig& cfg, const CorpusSplit& split) {
    TestSet t;
    t.backgrounds = background_pool(split.test_sources, cfg.patch_size, cfg.test_images, derive_seed(cfg.seed, {kTest, 0}));
    for (std::size_t i = 0; i < t.backgrounds.size(); ++i) {
        t.rain.push_back(rain::render_rain(cfg.test_range, cfg.patch_size, cfg.patch_size, derive_seed(cfg.seed, {kTest, 1, i})));
        t.rainy.push_back(compose(t.backgrounds[i], t.rain.back()));
    }
    return t;
}

CellResult run_cell(const MiniExperimentConfig& cfg, const CorpusSplit& split, const TestSet& test, std::size_t count,
                    const rain::RainRange& range, int rep, const IterationCallback& cb) {
    CellResult cell;
    cell.count = count;
    cell.range = range.name;
    cell.rep = rep;
    const std::uint64_t seed =
        derive_seed(cfg.seed, {kCell, count, name_key(range.name), static_cast<std::uint64_t>(rep)});

    const auto pool = background_pool(split.train_sources, cfg.patch_size, count, derive_seed(seed, {kPool}));
    MiniModel model(derive_seed(seed, {kInit}));
    std::vector<ad::Var> vars;
    for (const auto& p : model.parameters()) vars.push_back(p.var);
    ad::Adam opt(vars, cfg.lr);
    Rng pick(derive_seed(seed, {kDraw}));

    // Fixed batch of training samples, for the final loss against identity.
    std::vector<Sample> probe;
    {
        Rng probe_pick(derive_seed(seed, {kProbe}));
        for (std::size_t i = 0; i < kProbeBatch; ++i)
            probe.push_back(draw_sample(pool, range, probe_pick, derive_seed(seed, {kProbe, i})));
    }

    const auto B = static_cast<std::size_t>(cfg.batch_size);
    std::vector<Sample> batch(B);
    std::vector<const Image*> in(B), tg(B);
    try {
        double window = 0.0;
        for (int it = 0; it < cfg.iterations; ++it) {
            for (std::size_t b = 0; b < B; ++b) {
                batch[b] = draw_sample(pool, range, pick, derive_seed(seed, {kRain, static_cast<std::uint64_t>(it), b}));
                in[b] = &batch[b].rainy;
                tg[b] = &batch[b].clean;
            }
            const ad::Var loss = ad::l1_loss(model.forward(ad::constant(stack(in))), ad::constant(stack(tg)));
            ad::backward(loss);
            opt.step();
            const double l = loss.value().item();
            window += l;
            if ((it + 1) % kCurveWindow == 0 || it + 1 == cfg.iterations) {
                const int len = (it + 1) % kCurveWindow == 0 ? kCurveWindow : (it + 1) % kCurveWindow;
                cell.loss_curve.push_back(window / len);
                window = 0.0;
            }
            if (cb) cb(cell, it, l);
        }
    } catch (const NumericError& e) {
        cell.diverged = true;
        cell.error = e.what();
        return cell;
    }

    {
        std::vector<const Image*> pin, ptg;
        for (const auto& s : probe) {
            pin.push_back(&s.rainy);
            ptg.push_back(&s.clean);
        }
        const ad::Tensor x = stack(pin), y = stack(ptg);
        ad::NoGradGuard guard;
        cell.train_loss = l1(model.forward(ad::constant(x)).value(), y);
        cell.identity_loss = l1(x, y);
    }

    std::vector<Image> outputs;
    for (const auto& r : test.rainy) outputs.push_back(predict_one(model, r));
    cell.report.model_id = "mini-" + std::to_string(count) + "-" + range.name + "-" + std::to_string(rep);
    cell.report.manifest_id = "mini-test";
    cell.report.threshold = cfg.threshold;
    for (std::size_t i = 0; i < outputs.size(); ++i)
        cell.report.records.push_back(metrics::evaluate_image(dataset::stem_for(i), outputs[i], test.rainy[i],
                                                              test.backgrounds[i], test.rain[i], cfg.threshold));
    cell.report.finalize();
    for (double t : cfg.extra_thresholds) {
        metrics::EvalReport r;
        for (std::size_t i = 0; i < outputs.size(); ++i)
            r.records.push_back(metrics::evaluate_image(dataset::stem_for(i), outputs[i], test.rainy[i],
                                                        test.backgrounds[i], test.rain[i], t));
        r.finalize();
        cell.sweep.push_back({t, r.mean_rain_removal, r.mean_background_error});
    }
    return cell;
}

namespace {

std::vector<CellResult> run_cells(const MiniExperimentConfig& cfg, const fs::path& corpus_dir,
                                  const std::vector<rain::RainRange>& ranges, bool require_disjoint,
                                  const IterationCallback& cb) {
    std::vector<CellResult> cells;
    if (cfg.counts.empty() || ranges.empty()) return cells;
    for (const auto& r : ranges) {
        MiniExperimentConfig c = cfg;
        c.train_range = r;
        c.validate(require_disjoint);
    }
    const CorpusSplit split = split_corpus(corpus_dir, cfg.test_fraction);
    const TestSet test = make_test_set(cfg, split);
    for (std::size_t count : cfg.counts)
        for (const auto& r : ranges)
            for (int rep = 0; rep < cfg.seeds; ++rep) cells.push_back(run_cell(cfg, split, test, count, r, rep, cb));
    return cells;
}

}  // namespace

std::vector<CellResult> run_balance(const MiniExperimentConfig& cfg, const fs::path& corpus_dir,
                                    const std::vector<rain::RainRange>& ranges, const IterationCallback& cb) {
    return run_cells(cfg, corpus_dir, ranges, false, cb);
}

std::vector<CellResult> run_sweep(const MiniExperimentConfig& cfg, const fs::path& corpus_dir,
                                  const IterationCallback& cb) {
    return run_cells(cfg, corpus_dir, {cfg.train_range}, true, cb);
}

void write_cells_csv(const fs::path& path, const std::vector<CellResult>& cells) {
    csv::Table t{{"count", "range", "rep", "E_R", "E_B", "PSNR", "train_loss", "identity_loss", "diverged"}, {}};
    for (const auto& c : cells)
        t.add_row({csv::number(static_cast<long long>(c.count)), c.range, csv::number(static_cast<long long>(c.rep)),
                   csv::number(c.report.mean_rain_removal), csv::number(c.report.mean_background_error),
                   csv::number(c.report.mean_psnr), csv::number(c.train_loss), csv::number(c.identity_loss),
                   c.diverged ? "1" : "0"});
    csv::write(path, t);
}

void write_threshold_csv(const fs::path& path, const std::vector<CellResult>& cells) {
    csv::Table t{{"count", "range", "rep", "threshold", "E_R", "E_B"}, {}};
    for (const auto& c : cells)
        for (const auto& s : c.sweep)
            t.add_row({csv::number(static_cast<long long>(c.count)), c.range,
                       csv::number(static_cast<long long>(c.rep)), csv::number(s.threshold),
                       csv::number(s.rain_removal), csv::number(s.background_error)});
    csv::write(path, t);
}

void write_summary_csv(const fs::path& path, const std::vector<CellResult>& cells) {
    struct Acc {
        double er = 0, eb = 0, psnr = 0;
        int n = 0;
    };
    std::vector<std::pair<std::size_t, std::string>> keys;
    std::map<std::pair<std::size_t, std::string>, Acc> acc;
    for (const auto& c : cells) {
        const auto key = std::make_pair(c.count, c.range);
        if (!acc.contains(key)) keys.push_back(key);
        Acc& a = acc[key];
        if (c.diverged) continue;
        a.er += c.report.mean_rain_removal;
        a.eb += c.report.mean_background_error;
        a.psnr += c.report.mean_psnr;
        ++a.n;
    }
    csv::Table t{{"count", "range", "mean_E_R", "mean_E_B", "mean_PSNR", "reps"}, {}};
    for (const auto& k : keys) {
        const Acc& a = acc[k];
        const double n = a.n ? a.n : std::nan("");
        t.add_row({csv::number(static_cast<long long>(k.first)), k.second, csv::number(a.er / n),
                   csv::number(a.eb / n), csv::number(a.psnr / n), csv::number(static_cast<long long>(a.n))});
    }
    csv::write(path, t);
}

}  // namespace rainlab::mini
