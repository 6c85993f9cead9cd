#include "rainlab/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "rainlab/complexity.hpp"
#include "rainlab/csv.hpp"
#include "rainlab/dataset.hpp"
#include "rainlab/error.hpp"
#include "rainlab/image.hpp"
#include "rainlab/metrics.hpp"
#include "rainlab/mini.hpp"
#include "rainlab/plot.hpp"
#include "rainlab/procedural.hpp"
#include "rainlab/rain.hpp"
#include "rainlab/sharpness.hpp"
#include "rainlab/toy.hpp"

namespace rainlab::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// Options of one (sub)command, remembered so the resolved values can be
// written back as a config file keyed by flag name.
class Options {
public:
    explicit Options(CLI::App* app) : app_(app) {}

    template <typename T>
    CLI::Option* add(const std::string& name, T& var, const std::string& desc) {
        dump_.emplace_back(name, [&var] { return json(var); });
        return app_->add_option("--" + name, var, desc)->capture_default_str();
    }
    CLI::Option* add(const std::string& name, fs::path& var, const std::string& desc) {
        dump_.emplace_back(name, [&var] { return json(var.string()); });
        return app_->add_option("--" + name, var, desc)->capture_default_str();
    }
    CLI::Option* flag(const std::string& name, bool& var, const std::string& desc) {
        dump_.emplace_back(name, [&var] { return json(var); });
        return app_->add_flag("--" + name, var, desc);
    }

    json resolved() const {
        json j = json::object();
        for (const auto& [name, fn] : dump_) j[name] = fn();
        return j;
    }

private:
    CLI::App* app_;
    std::vector<std::pair<std::string, std::function<json()>>> dump_;
};

struct Command {
    std::vector<std::string> path;
    CLI::App* app = nullptr;
    std::unique_ptr<Options> options;
    std::function<void()> run;
};

void write_config(const fs::path& file, const Command& cmd) {
    json j;
    j["command"] = cmd.path;
    j["options"] = cmd.options->resolved();
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write '" + file.string() + "'");
    out << j.dump(2) << '\n';
}

// Config written next to a single output file: r.png -> r.config.json.
fs::path sidecar(const fs::path& file) {
    fs::path p = file;
    return p.replace_extension(".config.json");
}

std::pair<int, int> parse_size(const std::string& s) {
    const auto x = s.find('x');
    try {
        if (x == std::string::npos) throw std::invalid_argument(s);
        std::size_t a = 0, b = 0;
        const int h = std::stoi(s.substr(0, x), &a), w = std::stoi(s.substr(x + 1), &b);
        if (a != x || b != s.size() - x - 1 || h <= 0 || w <= 0) throw std::invalid_argument(s);
        return {h, w};
    } catch (const std::exception&) {
        throw CLI::ValidationError("--size", "expected HxW, got '" + s + "'");
    }
}

rain::RainRange range_by_name(const std::string& name) {
    if (name == "heldout") return mini::held_out_range();
    return rain::preset(name);
}

std::vector<fs::path> images_in(const fs::path& input) {
    if (fs::is_directory(input)) return dataset::list_corpus(input);
    if (!fs::exists(input)) throw IoError("'" + input.string() + "' does not exist");
    return {input};
}

void emit(const csv::Table& t, const fs::path& out_file, std::ostream& out) {
    if (out_file.empty())
        out << csv::format(t);
    else
        csv::write(out_file, t);
}

// Expands a config file into flag tokens. Flags also given on the command
// line are skipped so the command line wins.
std::vector<std::string> apply_config(const fs::path& file, std::vector<std::string> args,
                                      const std::set<std::string>& subcommands) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot read config '" + file.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("config '" + file.string() + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("command") || !j.contains("options"))
        throw DataError("config '" + file.string() + "' needs 'command' and 'options'");

    std::vector<std::string> command;
    std::size_t first_flag = 0;
    while (first_flag < args.size() && args[first_flag].rfind("--", 0) != 0) ++first_flag;
    if (first_flag > 0 && subcommands.contains(args[0])) {
        command.assign(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(first_flag));
    } else {
        command = j.at("command").get<std::vector<std::string>>();
        first_flag = 0;
    }
    std::set<std::string> given;
    for (std::size_t i = first_flag; i < args.size(); ++i) {
        if (args[i].rfind("--", 0) != 0) continue;
        given.insert(args[i].substr(2, args[i].find('=') == std::string::npos ? std::string::npos : args[i].find('=') - 2));
    }

    std::vector<std::string> tokens = command;
    for (const auto& [key, value] : j.at("options").items()) {
        if (given.contains(key)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) tokens.push_back("--" + key);
            continue;
        }
        std::vector<std::string> vals;
        auto scalar = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
        if (value.is_array()) {
            for (const auto& v : value) vals.push_back(scalar(v));
            if (vals.empty()) continue;
        } else {
            vals.push_back(scalar(value));
        }
        tokens.push_back("--" + key);
        tokens.insert(tokens.end(), vals.begin(), vals.end());
    }
    tokens.insert(tokens.end(), args.begin() + static_cast<std::ptrdiff_t>(first_flag), args.end());
    return tokens;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Synthetic rain, deraining metrics and generalization experiments"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");
    std::string config_path;
    app.add_option("--config", config_path, "JSON config written by a previous run (flags override it)");

    std::vector<std::unique_ptr<Command>> commands;
    auto make = [&](CLI::App* parent, const std::string& name, const std::string& desc,
                    std::vector<std::string> path) -> Command& {
        auto c = std::make_unique<Command>();
        c->path = std::move(path);
        c->app = parent->add_subcommand(name, desc);
        c->options = std::make_unique<Options>(c->app);
        commands.push_back(std::move(c));
        return *commands.back();
    };

    // rain
    std::string rain_preset = "medium", rain_size = "128x128";
    std::uint64_t rain_seed = 0;
    fs::path rain_out, rain_log, rain_background, rain_rainy;
    {
        Command& c = make(&app, "rain", "Render a rain layer and its streak log", {"rain"});
        c.options->add("preset", rain_preset, "small|medium|large|heldout");
        c.options->add("size", rain_size, "HxW");
        c.options->add("seed", rain_seed, "Seed");
        c.options->add("out", rain_out, "Rain PNG")->required();
        c.options->add("log", rain_log, "Streak CSV (default: <out>.csv)");
        c.options->add("background", rain_background, "Background PNG to compose with");
        c.options->add("rainy", rain_rainy, "Rainy PNG output (needs --background)");
        c.run = [&, &cmd = c] {
            const auto [h, w] = parse_size(rain_size);
            const auto range = range_by_name(rain_preset);
            std::optional<Image> bg;
            if (!rain_background.empty()) {
                bg = load_image(rain_background);
                if (bg->height != h || bg->width != w)
                    throw ShapeError("background is " + std::to_string(bg->height) + "x" + std::to_string(bg->width) +
                                     ", --size is " + rain_size);
            }
            const auto rr = rain::render_rain_logged(range, h, w, rain_seed);
            save_rain(rr.field, rain_out);
            const fs::path log = rain_log.empty() ? fs::path(rain_out).replace_extension(".csv") : rain_log;
            std::ofstream(log, std::ios::binary) << rain::streaks_to_csv(rr.streaks);
            if (!rain_rainy.empty()) {
                if (!bg) throw CLI::ValidationError("--rainy", "needs --background");
                save_image(compose(*bg, quantized(rr.field)), rain_rainy);
            }
            write_config(sidecar(rain_out), cmd);
        };
    }

    // build
    dataset::BuildOptions bopt;
    std::string build_preset = "medium", build_bin;
    fs::path build_manifest;
    {
        Command& c = make(&app, "build", "Build a paired dataset, or rebuild one from its manifest", {"build"});
        c.options->add("corpus", bopt.corpus_dir, "Directory of background PNGs");
        c.options->add("out", bopt.out_dir, "Output directory (dataset goes to <out>/<id>)")->required();
        c.options->add("id", bopt.id, "Dataset id");
        c.options->add("patch-size", bopt.patch_size, "Patch side in pixels");
        c.options->add("count", bopt.count, "Number of patches");
        c.options->add("preset", build_preset, "Rain range: small|medium|large|heldout");
        c.options->add("bin", build_bin, "Sharpness bin filter: low|medium|high");
        c.options->add("split", bopt.split, "train|test");
        c.options->add("seed", bopt.seed, "Seed");
        c.options->add("manifest", build_manifest, "Rebuild this manifest's images into <out> instead");
        c.run = [&, &cmd = c] {
            if (!build_manifest.empty()) {
                const auto m = dataset::load_manifest(build_manifest);
                dataset::materialize(m, bopt.out_dir);
                dataset::save_manifest(m, bopt.out_dir / "manifest.json");
                write_config(bopt.out_dir / "config.json", cmd);
                return;
            }
            if (bopt.corpus_dir.empty()) throw CLI::ValidationError("--corpus", "required unless --manifest is given");
            bopt.range = range_by_name(build_preset);
            if (!build_bin.empty()) bopt.sharpness_bin = parse_bin(build_bin);
            dataset::build_dataset(bopt);
            write_config(bopt.out_dir / bopt.id / "config.json", cmd);
        };
    }

    // eval
    fs::path eval_manifest, eval_pred, eval_out = ".";
    double eval_t = metrics::kDefaultThreshold;
    std::string eval_model;
    {
        Command& c = make(&app, "eval", "Score prediction PNGs against a dataset", {"eval"});
        c.options->add("manifest", eval_manifest, "manifest.json of the dataset")->required();
        c.options->add("pred-dir", eval_pred, "Directory of <stem>.png predictions")->required();
        c.options->add("t", eval_t, "Rain mask threshold on [0,1]");
        c.options->add("out", eval_out, "Directory for report.json and report.csv");
        c.options->add("model-id", eval_model, "Label stored in the report");
        c.run = [&, &cmd = c] {
            const auto r = metrics::evaluate_directory(eval_manifest, eval_pred, eval_t, eval_model);
            metrics::save_report(r, eval_out / "report.json", eval_out / "report.csv");
            write_config(eval_out / "report.config.json", cmd);
            out << "E_R " << r.mean_rain_removal << "  E_B " << r.mean_background_error << "  PSNR " << r.mean_psnr
                << "  (" << r.records.size() << " images)\n";
        };
    }

    // sharpness
    fs::path sharp_in, sharp_out;
    {
        Command& c = make(&app, "sharpness", "Laplacian-variance sharpness per image", {"sharpness"});
        c.options->add("input", sharp_in, "PNG file or directory")->required();
        c.options->add("out", sharp_out, "CSV file (default: standard output)");
        c.run = [&, &cmd = c] {
            csv::Table t{{"name", "sharpness", "bin"}, {}};
            double total = 0.0;
            const auto files = images_in(sharp_in);
            for (const auto& f : files) {
                const double s = sharpness(load_image(f));
                total += s;
                t.add_row({f.filename().string(), csv::number(s), bin_name(s)});
            }
            const double mean = total / static_cast<double>(files.size());
            t.add_row({"mean", csv::number(mean), bin_name(mean)});
            emit(t, sharp_out, out);
            if (!sharp_out.empty()) write_config(sidecar(sharp_out), cmd);
        };
    }

    // complexity
    fs::path cx_in, cx_out;
    int cx_patch = 0, cx_scales = 0;
    std::size_t cx_samples = 100;
    std::uint64_t cx_seed = 0;
    {
        Command& c = make(&app, "complexity", "Multi-scale structural complexity", {"complexity"});
        c.options->add("input", cx_in, "PNG file or directory")->required();
        c.options->add("patch-size", cx_patch, "Score random patches of this size (0: whole images)");
        c.options->add("samples", cx_samples, "Patch count when --patch-size is set");
        c.options->add("scales", cx_scales, "Number of scales (0: floor(log2(min side)) - 2)");
        c.options->add("seed", cx_seed, "Seed for patch sampling");
        c.options->add("out", cx_out, "CSV file (default: standard output)");
        c.run = [&, &cmd = c] {
            csv::Table t{{"name", "complexity"}, {}};
            double total = 0.0;
            std::size_t n = 0;
            if (cx_patch > 0) {
                if (!fs::is_directory(cx_in)) throw DataError("--patch-size needs a directory input");
                const auto r = complexity::corpus_complexity(cx_in, cx_patch, cx_samples, cx_seed, cx_scales);
                for (std::size_t i = 0; i < r.per_patch.size(); ++i)
                    t.add_row({r.sources[i], csv::number(r.per_patch[i].total)});
                total = r.mean.total * static_cast<double>(r.per_patch.size());
                n = r.per_patch.size();
            } else {
                for (const auto& f : images_in(cx_in)) {
                    const double s = complexity::structural_complexity(load_image(f), cx_scales).total;
                    t.add_row({f.filename().string(), csv::number(s)});
                    total += s;
                    ++n;
                }
            }
            t.add_row({"mean", csv::number(total / static_cast<double>(n))});
            emit(t, cx_out, out);
            if (!cx_out.empty()) write_config(sidecar(cx_out), cmd);
        };
    }

    // toy
    CLI::App* toy_app = app.add_subcommand("toy", "Cosine denoising experiments");
    toy_app->require_subcommand(1);
    toy::ToyConfig tcfg;
    std::string toy_precision = "single";
    fs::path toy_out, toy_ckpt;
    int toy_test_order = 1;
    double toy_test_mean = 0.0, toy_test_std = 1.0;
    std::vector<int> toy_orders{1, 4, 8};
    auto add_train_options = [&](Options& o) {
        o.add("noise-mean", tcfg.noise_mean, "Training noise mean");
        o.add("noise-std", tcfg.noise_std, "Training noise stddev");
        o.add("grid-size", tcfg.grid_size, "Points over [-10, 10]");
        o.add("segment-length", tcfg.segment_length, "Points per segment");
        o.add("segments", tcfg.train_segments, "Training segments");
        o.add("epochs", tcfg.epochs, "Epochs");
        o.add("batch-size", tcfg.batch_size, "Batch size");
        o.add("lr", tcfg.lr, "Adam learning rate");
        o.add("seed", tcfg.seed, "Seed");
        o.add("precision", toy_precision, "Convolution products: single|double")
            ->check(CLI::IsMember({"single", "double"}));
        o.add("out", toy_out, "Output directory")->required();
    };
    auto log_epoch = [&](int e, double loss, const toy::ToyModel&) {
        err << "epoch " << e + 1 << "/" << tcfg.epochs << "  l1 " << loss << '\n';
    };
    auto plot_trace = [](const fs::path& csv_file, const std::string& title) {
        plot::PlotSpec spec;
        spec.title = title;
        spec.x = "x";
        spec.y = {"noisy", "clean", "predicted"};
        plot::plot_csv(csv_file, spec, fs::path(csv_file).replace_extension(".svg"));
    };
    {
        Command& c = make(toy_app, "train", "Train one denoiser", {"toy", "train"});
        c.options->add("order", tcfg.order, "Cosine order O");
        add_train_options(*c.options);
        c.run = [&, &cmd = c] {
            std::optional<ad::SinglePrecisionConv> fp32;
            if (toy_precision == "single") fp32.emplace();
            const auto r = toy::train_toy(tcfg, log_epoch);
            fs::create_directories(toy_out);
            ad::save_checkpoint(toy_out / "model.ckpt", r.model.parameters());
            toy::write_loss_csv(toy_out / "loss.csv", r.loss_curve);
            const auto trace = toy::eval_toy(r.model, tcfg.order, tcfg.noise_mean, tcfg.noise_std,
                                             toy::eval_seed(tcfg.seed, tcfg.order, tcfg.noise_mean, tcfg.noise_std), tcfg.grid_size, tcfg.segment_length);
            toy::write_trace_csv(toy_out / "trace.csv", trace);
            plot_trace(toy_out / "trace.csv", "O=" + std::to_string(tcfg.order) + " MSE " + csv::number(trace.mse));
            write_config(toy_out / "config.json", cmd);
            out << "in-distribution MSE " << trace.mse << '\n';
        };
    }
    {
        Command& c = make(toy_app, "eval", "Evaluate a trained denoiser on the dense grid", {"toy", "eval"});
        c.options->add("checkpoint", toy_ckpt, "model.ckpt from toy train")->required();
        c.options->add("order", toy_test_order, "Test cosine order");
        c.options->add("noise-mean", toy_test_mean, "Test noise mean");
        c.options->add("noise-std", toy_test_std, "Test noise stddev");
        c.options->add("grid-size", tcfg.grid_size, "Points over [-10, 10]");
        c.options->add("seed", tcfg.seed, "Noise seed");
        c.options->add("out", toy_out, "Output directory")->required();
        c.run = [&, &cmd = c] {
            toy::ToyModel model(0);
            ad::load_checkpoint(toy_ckpt, model.parameters());
            const auto trace = toy::eval_toy(model, toy_test_order, toy_test_mean, toy_test_std, tcfg.seed, tcfg.grid_size);
            fs::create_directories(toy_out);
            toy::write_trace_csv(toy_out / "trace.csv", trace);
            csv::Table t{{"order", "noise_mean", "noise_std", "mse", "bias"}, {}};
            t.add_row({csv::number(static_cast<long long>(toy_test_order)), csv::number(toy_test_mean),
                       csv::number(toy_test_std), csv::number(trace.mse), csv::number(trace.bias)});
            csv::write(toy_out / "summary.csv", t);
            plot_trace(toy_out / "trace.csv", "test O=" + std::to_string(toy_test_order) + " MSE " + csv::number(trace.mse));
            write_config(toy_out / "config.json", cmd);
            out << "MSE " << trace.mse << "  bias " << trace.bias << '\n';
        };
    }
    {
        Command& c = make(toy_app, "grid", "Train one model per order and run the order/noise test grid",
                          {"toy", "grid"});
        c.options->add("orders", toy_orders, "Training orders");
        add_train_options(*c.options);
        c.run = [&, &cmd = c] {
            std::optional<ad::SinglePrecisionConv> fp32;
            if (toy_precision == "single") fp32.emplace();
            const auto g = toy::run_grid(tcfg, toy_orders, log_epoch);
            fs::create_directories(toy_out / "cells");
            toy::write_grid_csv(toy_out / "grid.csv", g);
            for (std::size_t i = 0; i < g.orders.size(); ++i)
                toy::write_loss_csv(toy_out / ("loss_O" + std::to_string(g.orders[i]) + ".csv"), g.loss_curves[i]);
            for (const auto& cell : g.cells) {
                const std::string name = "O" + std::to_string(cell.train_order) + "_" + cell.kind + "_O" +
                                         std::to_string(cell.test_order) + "_N" + csv::number(cell.noise_mean) + "_" +
                                         csv::number(cell.noise_std);
                const fs::path f = toy_out / "cells" / (name + ".csv");
                toy::write_trace_csv(f, cell.trace);
                plot_trace(f, "train O=" + std::to_string(cell.train_order) + ", test O=" +
                                  std::to_string(cell.test_order) + " N(" + csv::number(cell.noise_mean) + "," +
                                  csv::number(cell.noise_std) + ")  MSE " + csv::number(cell.trace.mse));
            }
            write_config(toy_out / "config.json", cmd);
            out << g.cells.size() << " cells written to " << toy_out.string() << '\n';
        };
    }

    // mini
    CLI::App* mini_app = app.add_subcommand("mini", "Small-scale deraining generalization experiments");
    mini_app->require_subcommand(1);
    mini::MiniExperimentConfig mcfg;
    fs::path mini_corpus, mini_out;
    std::string mini_preset = "medium", mini_precision = "single";
    std::vector<std::string> mini_presets{"small", "medium", "large"};
    int proc_count = 0, proc_size = 96;
    auto add_mini_options = [&](Options& o) {
        o.add("corpus", mini_corpus, "Directory of background PNGs");
        o.add("procedural-corpus", proc_count, "Generate this many procedural backgrounds instead of --corpus");
        o.add("procedural-size", proc_size, "Side of generated backgrounds");
        o.add("counts", mcfg.counts, "Background patch counts (ascending)");
        o.add("iterations", mcfg.iterations, "Training iterations per cell");
        o.add("batch-size", mcfg.batch_size, "Batch size");
        o.add("lr", mcfg.lr, "Adam learning rate");
        o.add("seeds", mcfg.seeds, "Repetitions per cell");
        o.add("test-images", mcfg.test_images, "Held-out test images");
        o.add("test-fraction", mcfg.test_fraction, "Share of corpus files held out for testing");
        o.add("t", mcfg.threshold, "Rain mask threshold on [0,1]");
        o.add("extra-t", mcfg.extra_thresholds, "Additional thresholds to score");
        o.add("seed", mcfg.seed, "Seed");
        o.add("precision", mini_precision, "Convolution products: single|double")
            ->check(CLI::IsMember({"single", "double"}));
        o.add("out", mini_out, "Output directory")->required();
    };
    auto prepare_corpus = [&]() -> fs::path {
        if (proc_count > 0) {
            const fs::path dir = mini_out / "corpus";
            write_procedural_corpus(dir, proc_count, proc_size, proc_size, 3, derive_seed(mcfg.seed, {0xC0}));
            return dir;
        }
        if (mini_corpus.empty()) throw CLI::ValidationError("--corpus", "required unless --procedural-corpus is set");
        return mini_corpus;
    };
    auto log_iter = [&](const mini::CellResult& cell, int it, double loss) {
        if ((it + 1) % 500 == 0)
            err << "count " << cell.count << " range " << cell.range << " rep " << cell.rep << "  iter " << it + 1
                << "  l1 " << loss << '\n';
    };
    auto write_mini = [&](const std::vector<mini::CellResult>& cells, bool by_range) {
        fs::create_directories(mini_out);
        mini::write_cells_csv(mini_out / "cells.csv", cells);
        mini::write_summary_csv(mini_out / "summary.csv", cells);
        mini::write_threshold_csv(mini_out / "thresholds.csv", cells);
        for (const auto& [col, name] : {std::pair{"mean_E_R", "E_R"}, std::pair{"mean_E_B", "E_B"}}) {
            plot::PlotSpec spec;
            spec.title = std::string(name) + " on held-out rain vs background count";
            spec.x = "count";
            spec.y = {col};
            spec.group = by_range ? "range" : "";
            spec.log_x = true;
            plot::plot_csv(mini_out / "summary.csv", spec, mini_out / (std::string(name) + "_vs_count.svg"));
        }
        for (const auto& c : cells)
            if (c.diverged) err << "cell count " << c.count << " range " << c.range << " rep " << c.rep << " diverged: " << c.error << '\n';
    };
    {
        Command& c = make(mini_app, "sweep", "E_R/E_B against background count", {"mini", "sweep"});
        add_mini_options(*c.options);
        c.options->add("preset", mini_preset, "Training rain range");
        c.run = [&, &cmd = c] {
            std::optional<ad::SinglePrecisionConv> fp32;
            if (mini_precision == "single") fp32.emplace();
            mcfg.train_range = range_by_name(mini_preset);
            mcfg.validate();
            const auto cells = mini::run_sweep(mcfg, prepare_corpus(), log_iter);
            write_mini(cells, false);
            write_config(mini_out / "config.json", cmd);
            out << cells.size() << " cells written to " << mini_out.string() << '\n';
        };
    }
    {
        Command& c = make(mini_app, "balance", "Background count against training rain range", {"mini", "balance"});
        add_mini_options(*c.options);
        c.options->add("presets", mini_presets, "Training rain ranges");
        c.run = [&, &cmd = c] {
            std::optional<ad::SinglePrecisionConv> fp32;
            if (mini_precision == "single") fp32.emplace();
            std::vector<rain::RainRange> ranges;
            for (const auto& p : mini_presets) ranges.push_back(range_by_name(p));
            const auto cells = mini::run_balance(mcfg, prepare_corpus(), ranges, log_iter);
            write_mini(cells, true);
            write_config(mini_out / "config.json", cmd);
            out << cells.size() << " cells written to " << mini_out.string() << '\n';
        };
    }

    // plot
    plot::PlotSpec pspec;
    fs::path plot_in, plot_out;
    {
        Command& c = make(&app, "plot", "Line chart SVG from a CSV file", {"plot"});
        c.options->add("csv", plot_in, "Input CSV")->required();
        c.options->add("x", pspec.x, "x column")->required();
        c.options->add("y", pspec.y, "y columns")->required();
        c.options->add("group", pspec.group, "Split series by this column");
        c.options->add("title", pspec.title, "Title");
        c.options->flag("log-x", pspec.log_x, "Logarithmic x axis");
        c.options->add("out", plot_out, "SVG file")->required();
        c.run = [&, &cmd = c] {
            plot::plot_csv(plot_in, pspec, plot_out);
            write_config(sidecar(plot_out), cmd);
        };
    }

    std::vector<std::string> args = raw_args;
    try {
        std::set<std::string> top;
        for (const auto* s : app.get_subcommands([](CLI::App*) { return true; })) top.insert(s->get_name());
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--config" || args[i].rfind("--config=", 0) == 0) {
                const bool inline_value = args[i] != "--config";
                if (!inline_value && i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a file");
                const std::string file = inline_value ? args[i].substr(9) : args[i + 1];
                args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                           args.begin() + static_cast<std::ptrdiff_t>(i + (inline_value ? 1 : 2)));
                args = apply_config(file, args, top);
                break;
            }
        }
        // mini balance defaults to fewer counts than the sweep
        if (args.size() >= 2 && args[0] == "mini" && args[1] == "balance") {
            bool counts_given = false;
            for (const auto& a : args) counts_given |= a == "--counts" || a.rfind("--counts=", 0) == 0;
            if (!counts_given) mcfg.counts = {8, 64, 512};
        }
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const CLI::App* target = &app;
        for (const auto& c : commands)
            if (c->app->parsed()) target = c->app;
        err << target->help();
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }

    for (const auto& c : commands) {
        if (!c->app->parsed()) continue;
        try {
            c->run();
            return kExitOk;
        } catch (const CLI::ParseError& e) {
            err << "error: " << e.what() << '\n';
            return kExitUsage;
        } catch (const Error& e) {
            err << "error: " << e.what() << '\n';
            return kExitData;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return kExitData;
        }
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace rainlab::cli
