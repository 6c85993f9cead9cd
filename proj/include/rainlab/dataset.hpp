#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "rainlab/image.hpp"
#include "rainlab/rain.hpp"
#include "rainlab/rng.hpp"
#include "rainlab/sharpness.hpp"

namespace rainlab::dataset {

namespace fs = std::filesystem;

// Sorted list of the PNG files directly inside a corpus directory.
std::vector<fs::path> list_corpus(const fs::path& corpus_dir);

struct CropRef {
    std::size_t source = 0;
    int y = 0;
    int x = 0;

    bool operator==(const CropRef&) const = default;
};

// Draws random patch_size x patch_size crop positions over a set of source
// dimensions. The source is chosen uniformly among sources large enough to
// hold a patch, then the offset uniformly within it. (source, offset) pairs
// are not repeated until every distinct crop has been drawn.
class CropSampler {
public:
    CropSampler(std::vector<ImageDims> dims, int patch_size, std::uint64_t seed);

    std::uint64_t total_distinct() const { return total_; }
    std::uint64_t drawn() const { return drawn_; }

    // nullopt once every distinct crop has been drawn.
    std::optional<CropRef> next_distinct();
    // Distinct while possible, then with repetition.
    CropRef next();

private:
    CropRef random_crop();
    void switch_to_enumeration();

    std::vector<ImageDims> dims_;
    std::vector<std::size_t> eligible_;
    int patch_;
    Rng rng_;
    std::uint64_t total_ = 0;
    std::uint64_t drawn_ = 0;
    std::vector<CropRef> remaining_;    // enumeration mode
    bool enumerating_ = false;
    struct Hash {
        std::size_t operator()(const CropRef& c) const noexcept;
    };
    std::unordered_set<CropRef, Hash> seen_;
};

struct Patch {
    Image image;
    std::string source;  // file name relative to the corpus directory
    int y = 0;
    int x = 0;
};

// Uniformly random crops, deterministic under seed. Throws DataError when the
// corpus is empty or no image is at least patch_size in both dimensions.
std::vector<Patch> extract_patches(const fs::path& corpus_dir, int patch_size, std::size_t count,
                                   std::uint64_t seed);
std::vector<Patch> extract_patches(const std::vector<fs::path>& sources, int patch_size, std::size_t count,
                                   std::uint64_t seed);

struct ManifestEntry {
    std::string stem;    // NNNNNN
    std::string source;  // relative to corpus_dir
    int y = 0;
    int x = 0;
    double sharpness = 0.0;
    std::string bin;  // low|medium|high|none
    std::uint64_t seed = 0;
};

struct DatasetManifest {
    std::string id;
    std::string corpus_dir;
    int patch_size = 0;
    std::string split = "train";
    std::uint64_t creation_seed = 0;
    rain::RainRange range;
    std::optional<SharpnessBin> sharpness_bin;
    std::vector<ManifestEntry> entries;
};

nlohmann::ordered_json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);
void save_manifest(const DatasetManifest& m, const fs::path& path);
DatasetManifest load_manifest(const fs::path& path);

nlohmann::ordered_json range_to_json(const rain::RainRange& r);
rain::RainRange range_from_json(const nlohmann::json& j);

struct BuildOptions {
    fs::path corpus_dir;
    fs::path out_dir;
    std::string id = "dataset";
    int patch_size = 128;
    std::size_t count = 8;
    rain::RainRange range = rain::preset("medium");
    std::optional<SharpnessBin> sharpness_bin;
    std::string split = "train";
    std::uint64_t seed = 0;
};

// Selects patches, renders rain and writes
// <out_dir>/<id>/{backgrounds,rain,rainy}/NNNNNN.png plus
// <out_dir>/<id>/manifest.json. Returns the manifest.
DatasetManifest build_dataset(const BuildOptions& opts);

// Writes the image trees described by a manifest into dataset_dir. The same
// routine backs build_dataset, so a rebuild is byte-identical.
void materialize(const DatasetManifest& m, const fs::path& dataset_dir);

// Layout helpers.
fs::path background_path(const fs::path& dataset_dir, const std::string& stem);
fs::path rain_path(const fs::path& dataset_dir, const std::string& stem);
fs::path rainy_path(const fs::path& dataset_dir, const std::string& stem);
std::string stem_for(std::size_t index);

}  // namespace rainlab::dataset
