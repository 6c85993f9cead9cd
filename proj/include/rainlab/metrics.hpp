#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rainlab/image.hpp"

namespace rainlab::metrics {

inline constexpr double kDefaultThreshold = 5.0 / 255.0;
inline constexpr double kPsnrCap = 99.0;

// M = 1 where rain > t (strict), 0 elsewhere.
BinaryMask rain_mask(const RainField& rain, double t);

// RMS of (output - rainy) over masked pixels, channels averaged before the
// root, on the 0-255 scale. Higher means more rain removed. Throws DataError
// on an empty mask.
double rain_removal_score(const Image& output, const Image& rainy, const BinaryMask& mask);

// RMS of (output - background) over unmasked pixels, 0-255 scale. Lower is
// better. Throws DataError when every pixel is masked.
double background_error(const Image& output, const Image& background, const BinaryMask& mask);

// 10 log10(1 / MSE) on the [0,1] scale; identical images report kPsnrCap.
double psnr(const Image& output, const Image& gt);

struct ImageRecord {
    std::string name;
    double rain_removal = 0.0;      // E_R
    double background_error = 0.0;  // E_B
    double psnr = 0.0;
    std::size_t masked = 0;
    std::size_t unmasked = 0;
    double threshold = kDefaultThreshold;
};

struct EvalReport {
    std::string manifest_id;
    std::string model_id;
    double threshold = kDefaultThreshold;
    std::vector<ImageRecord> records;
    double mean_rain_removal = 0.0;
    double mean_background_error = 0.0;
    double mean_psnr = 0.0;

    // Recomputes the aggregate means (compensated summation).
    void finalize();
};

ImageRecord evaluate_image(const std::string& name, const Image& output, const Image& rainy,
                           const Image& background, const RainField& rain, double t);

nlohmann::ordered_json to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);
std::string to_csv(const EvalReport& r);
void save_report(const EvalReport& r, const std::filesystem::path& json_path, const std::filesystem::path& csv_path);

// Scores prediction PNGs against a dataset directory written by the dataset
// builder. Predictions are matched to manifest entries by file stem; a
// missing or unexpected prediction is a DataError.
EvalReport evaluate_directory(const std::filesystem::path& manifest_path, const std::filesystem::path& pred_dir,
                              double t, const std::string& model_id = "");

// Neumaier-compensated sum.
class CompensatedSum {
public:
    void add(double v);
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace rainlab::metrics
