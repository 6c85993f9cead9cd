#include "rainlab/metrics.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rainlab/dataset.hpp"
#include "rainlab/error.hpp"

namespace rainlab::metrics {

void CompensatedSum::add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
        comp_ += (sum_ - t) + v;
    } else {
        comp_ += (v - t) + sum_;
    }
    sum_ = t;
}

namespace {

void check_same_shape(const Image& a, const Image& b, const char* what) {
    if (a.height != b.height || a.width != b.width || a.channels != b.channels) {
        throw ShapeError(std::string(what) + ": image shapes differ");
    }
}

void check_mask(const Image& a, const BinaryMask& m, const char* what) {
    if (a.height != m.height || a.width != m.width) throw ShapeError(std::string(what) + ": mask size differs");
}

// Mean over pixels where mask == want of the channel-averaged squared error.
double masked_mse(const Image& a, const Image& b, const BinaryMask& mask, std::uint8_t want, std::size_t& n) {
    CompensatedSum acc;
    n = 0;
    const int c = a.channels;
    for (std::size_t p = 0; p < a.pixel_count(); ++p) {
        if (mask.data[p] != want) continue;
        double e = 0.0;
        for (int k = 0; k < c; ++k) {
            const double d = a.data[p * c + k] - b.data[p * c + k];
            e += d * d;
        }
        acc.add(e / c);
        ++n;
    }
    return n == 0 ? 0.0 : acc.value() / static_cast<double>(n);
}

}  // namespace

BinaryMask rain_mask(const RainField& rain, double t) {
    BinaryMask m(rain.height, rain.width);
    for (std::size_t i = 0; i < rain.data.size(); ++i) m.data[i] = rain.data[i] > t ? 1 : 0;
    return m;
}

double rain_removal_score(const Image& output, const Image& rainy, const BinaryMask& mask) {
    check_same_shape(output, rainy, "rain_removal_score");
    check_mask(output, mask, "rain_removal_score");
    std::size_t n = 0;
    const double mse = masked_mse(output, rainy, mask, 1, n);
    if (n == 0) throw DataError("rain_removal_score: empty rain mask (rain below threshold everywhere)");
    return 255.0 * std::sqrt(mse);
}

double background_error(const Image& output, const Image& background, const BinaryMask& mask) {
    check_same_shape(output, background, "background_error");
    check_mask(output, mask, "background_error");
    std::size_t n = 0;
    const double mse = masked_mse(output, background, mask, 0, n);
    if (n == 0) throw DataError("background_error: every pixel is masked as rain");
    return 255.0 * std::sqrt(mse);
}

double psnr(const Image& output, const Image& gt) {
    check_same_shape(output, gt, "psnr");
    CompensatedSum acc;
    for (std::size_t i = 0; i < output.data.size(); ++i) {
        const double d = output.data[i] - gt.data[i];
        acc.add(d * d);
    }
    const double mse = output.data.empty() ? 0.0 : acc.value() / static_cast<double>(output.data.size());
    if (mse <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

ImageRecord evaluate_image(const std::string& name, const Image& output, const Image& rainy, const Image& background,
                           const RainField& rain, double t) {
    const BinaryMask mask = rain_mask(rain, t);
    ImageRecord r;
    r.name = name;
    r.threshold = t;
    r.rain_removal = rain_removal_score(output, rainy, mask);
    r.background_error = background_error(output, background, mask);
    r.psnr = psnr(output, background);
    r.masked = mask.count();
    r.unmasked = mask.data.size() - r.masked;
    return r;
}

void EvalReport::finalize() {
    CompensatedSum er, eb, ps;
    for (const auto& r : records) {
        er.add(r.rain_removal);
        eb.add(r.background_error);
        ps.add(r.psnr);
    }
    const double n = records.empty() ? 1.0 : static_cast<double>(records.size());
    mean_rain_removal = er.value() / n;
    mean_background_error = eb.value() / n;
    mean_psnr = ps.value() / n;
}

nlohmann::ordered_json to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["manifest_id"] = r.manifest_id;
    j["model_id"] = r.model_id;
    j["threshold"] = r.threshold;
    j["count"] = r.records.size();
    j["mean"] = {{"E_R", r.mean_rain_removal}, {"E_B", r.mean_background_error}, {"PSNR", r.mean_psnr}};
    auto recs = nlohmann::ordered_json::array();
    for (const auto& x : r.records) {
        recs.push_back({{"name", x.name},
                        {"E_R", x.rain_removal},
                        {"E_B", x.background_error},
                        {"PSNR", x.psnr},
                        {"masked", x.masked},
                        {"unmasked", x.unmasked},
                        {"threshold", x.threshold}});
    }
    j["images"] = std::move(recs);
    return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport r;
    r.manifest_id = j.at("manifest_id").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    r.threshold = j.at("threshold").get<double>();
    for (const auto& x : j.at("images")) {
        ImageRecord rec;
        rec.name = x.at("name").get<std::string>();
        rec.rain_removal = x.at("E_R").get<double>();
        rec.background_error = x.at("E_B").get<double>();
        rec.psnr = x.at("PSNR").get<double>();
        rec.masked = x.at("masked").get<std::size_t>();
        rec.unmasked = x.at("unmasked").get<std::size_t>();
        rec.threshold = x.at("threshold").get<double>();
        r.records.push_back(std::move(rec));
    }
    r.finalize();
    return r;
}

std::string to_csv(const EvalReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "name,E_R,E_B,PSNR,masked,unmasked,threshold\n";
    for (const auto& x : r.records) {
        os << x.name << ',' << x.rain_removal << ',' << x.background_error << ',' << x.psnr << ',' << x.masked << ','
           << x.unmasked << ',' << x.threshold << '\n';
    }
    return os.str();
}

void save_report(const EvalReport& r, const std::filesystem::path& json_path, const std::filesystem::path& csv_path) {
    for (const auto& p : {json_path, csv_path}) {
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream js(json_path, std::ios::binary);
    if (!js) throw IoError("cannot write '" + json_path.string() + "'");
    js << to_json(r).dump(2) << '\n';
    std::ofstream cs(csv_path, std::ios::binary);
    if (!cs) throw IoError("cannot write '" + csv_path.string() + "'");
    cs << to_csv(r);
}

EvalReport evaluate_directory(const std::filesystem::path& manifest_path, const std::filesystem::path& pred_dir,
                              double t, const std::string& model_id) {
    namespace fs = std::filesystem;
    const auto m = dataset::load_manifest(manifest_path);
    const fs::path data_dir = manifest_path.parent_path();
    if (!fs::is_directory(pred_dir)) throw IoError("prediction directory '" + pred_dir.string() + "' does not exist");

    std::set<std::string> expected, found;
    for (const auto& e : m.entries) expected.insert(e.stem);
    for (const auto& f : fs::directory_iterator(pred_dir)) {
        if (f.is_regular_file() && f.path().extension() == ".png") found.insert(f.path().stem().string());
    }
    std::string problems;
    for (const auto& s : expected) {
        if (!found.contains(s)) problems += " missing prediction " + s + ".png;";
    }
    for (const auto& s : found) {
        if (!expected.contains(s)) problems += " unexpected prediction " + s + ".png;";
    }
    if (!problems.empty()) throw DataError("prediction/manifest mismatch:" + problems);

    EvalReport report;
    report.manifest_id = m.id;
    report.model_id = model_id;
    report.threshold = t;
    for (const auto& e : m.entries) {
        const Image out = load_image(pred_dir / (e.stem + ".png"));
        const Image rainy = load_image(dataset::rainy_path(data_dir, e.stem));
        const Image bg = load_image(dataset::background_path(data_dir, e.stem));
        const RainField rain = load_rain(dataset::rain_path(data_dir, e.stem));
        if (out.height != bg.height || out.width != bg.width || out.channels != bg.channels) {
            throw DataError("prediction " + e.stem + ".png has a different shape than its background");
        }
        report.records.push_back(evaluate_image(e.stem, out, rainy, bg, rain, t));
    }
    report.finalize();
    return report;
}

}  // namespace rainlab::metrics
