#include "rainlab/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "rainlab/error.hpp"

namespace rainlab::dataset {

std::vector<fs::path> list_corpus(const fs::path& corpus_dir) {
    if (!fs::is_directory(corpus_dir)) throw IoError("corpus directory '" + corpus_dir.string() + "' does not exist");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(corpus_dir)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("corpus '" + corpus_dir.string() + "' contains no PNG images");
    return files;
}

std::size_t CropSampler::Hash::operator()(const CropRef& c) const noexcept {
    return static_cast<std::size_t>(splitmix64((static_cast<std::uint64_t>(c.source) << 40) ^
                                                (static_cast<std::uint64_t>(c.y) << 20) ^
                                                static_cast<std::uint64_t>(c.x)));
}

CropSampler::CropSampler(std::vector<ImageDims> dims, int patch_size, std::uint64_t seed)
    : dims_(std::move(dims)), patch_(patch_size), rng_(seed) {
    if (patch_size <= 0) throw DataError("patch size must be positive");
    if (dims_.empty()) throw DataError("empty corpus");
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (dims_[i].height >= patch_ && dims_[i].width >= patch_) {
            eligible_.push_back(i);
            total_ += static_cast<std::uint64_t>(dims_[i].height - patch_ + 1) *
                      static_cast<std::uint64_t>(dims_[i].width - patch_ + 1);
        }
    }
    if (eligible_.empty()) {
        throw DataError("no corpus image is at least " + std::to_string(patch_) + "x" + std::to_string(patch_));
    }
}

CropRef CropSampler::random_crop() {
    const std::size_t s =
        eligible_[static_cast<std::size_t>(rng_.uniform_int(0, static_cast<std::int64_t>(eligible_.size()) - 1))];
    CropRef c;
    c.source = s;
    c.y = static_cast<int>(rng_.uniform_int(0, dims_[s].height - patch_));
    c.x = static_cast<int>(rng_.uniform_int(0, dims_[s].width - patch_));
    return c;
}

void CropSampler::switch_to_enumeration() {
    enumerating_ = true;
    for (std::size_t s : eligible_) {
        for (int y = 0; y <= dims_[s].height - patch_; ++y) {
            for (int x = 0; x <= dims_[s].width - patch_; ++x) {
                CropRef c{s, y, x};
                if (!seen_.contains(c)) remaining_.push_back(c);
            }
        }
    }
    // Fisher-Yates with the sampler's own stream
    for (std::size_t i = remaining_.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng_.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(remaining_[i - 1], remaining_[j]);
    }
    seen_.clear();
}

std::optional<CropRef> CropSampler::next_distinct() {
    if (drawn_ >= total_) return std::nullopt;
    if (!enumerating_ && drawn_ * 2 >= total_) switch_to_enumeration();
    ++drawn_;
    if (enumerating_) {
        CropRef c = remaining_.back();
        remaining_.pop_back();
        return c;
    }
    for (;;) {
        CropRef c = random_crop();
        if (seen_.insert(c).second) return c;
    }
}

CropRef CropSampler::next() {
    if (auto c = next_distinct()) return *c;
    return random_crop();
}

namespace {

std::vector<ImageDims> read_all_dims(const std::vector<fs::path>& sources) {
    std::vector<ImageDims> dims;
    dims.reserve(sources.size());
    for (const auto& s : sources) dims.push_back(read_dimensions(s));
    return dims;
}

// Visits crops grouped by source so each source image is decoded once.
template <class Fn>
void for_each_crop_grouped(const std::vector<fs::path>& sources, const std::vector<CropRef>& crops, int patch,
                           Fn&& fn) {
    std::map<std::size_t, std::vector<std::size_t>> by_source;
    for (std::size_t i = 0; i < crops.size(); ++i) by_source[crops[i].source].push_back(i);
    for (const auto& [src, indices] : by_source) {
        const Image full = load_image(sources[src]);
        for (std::size_t i : indices) fn(i, crop(full, crops[i].y, crops[i].x, patch, patch));
    }
}

}  // namespace

std::vector<Patch> extract_patches(const std::vector<fs::path>& sources, int patch_size, std::size_t count,
                                   std::uint64_t seed) {
    if (sources.empty()) throw DataError("empty corpus");
    if (count == 0) return {};
    CropSampler sampler(read_all_dims(sources), patch_size, seed);
    std::vector<CropRef> crops;
    crops.reserve(count);
    for (std::size_t i = 0; i < count; ++i) crops.push_back(sampler.next());

    std::vector<Patch> out(count);
    for_each_crop_grouped(sources, crops, patch_size, [&](std::size_t i, Image img) {
        out[i].image = std::move(img);
        out[i].source = sources[crops[i].source].filename().string();
        out[i].y = crops[i].y;
        out[i].x = crops[i].x;
    });
    return out;
}

std::vector<Patch> extract_patches(const fs::path& corpus_dir, int patch_size, std::size_t count,
                                   std::uint64_t seed) {
    return extract_patches(list_corpus(corpus_dir), patch_size, count, seed);
}

nlohmann::ordered_json range_to_json(const rain::RainRange& r) {
    nlohmann::ordered_json j;
    j["name"] = r.name;
    j["quantity"] = {r.quantity_lo, r.quantity_hi};
    j["widths"] = r.widths;
    j["length"] = {r.length_lo, r.length_hi};
    j["direction"] = {r.direction_lo, r.direction_hi};
    return j;
}

rain::RainRange range_from_json(const nlohmann::json& j) {
    rain::RainRange r;
    r.name = j.at("name").get<std::string>();
    r.quantity_lo = j.at("quantity").at(0).get<int>();
    r.quantity_hi = j.at("quantity").at(1).get<int>();
    r.widths = j.at("widths").get<std::vector<int>>();
    r.length_lo = j.at("length").at(0).get<double>();
    r.length_hi = j.at("length").at(1).get<double>();
    r.direction_lo = j.at("direction").at(0).get<double>();
    r.direction_hi = j.at("direction").at(1).get<double>();
    r.validate();
    return r;
}

nlohmann::ordered_json to_json(const DatasetManifest& m) {
    nlohmann::ordered_json j;
    j["format"] = "rainlab-dataset-manifest";
    j["version"] = 1;
    j["id"] = m.id;
    j["split"] = m.split;
    j["patch_size"] = m.patch_size;
    j["creation_seed"] = m.creation_seed;
    j["corpus_dir"] = m.corpus_dir;
    j["rain_range"] = range_to_json(m.range);
    j["sharpness_bin"] = m.sharpness_bin ? nlohmann::ordered_json(to_string(*m.sharpness_bin)) : nullptr;
    auto entries = nlohmann::ordered_json::array();
    for (const auto& e : m.entries) {
        nlohmann::ordered_json je;
        je["stem"] = e.stem;
        je["source"] = e.source;
        je["y"] = e.y;
        je["x"] = e.x;
        je["sharpness"] = e.sharpness;
        je["bin"] = e.bin;
        je["seed"] = e.seed;
        entries.push_back(std::move(je));
    }
    j["entries"] = std::move(entries);
    return j;
}

DatasetManifest manifest_from_json(const nlohmann::json& j) {
    try {
        DatasetManifest m;
        m.id = j.at("id").get<std::string>();
        m.split = j.at("split").get<std::string>();
        m.patch_size = j.at("patch_size").get<int>();
        m.creation_seed = j.at("creation_seed").get<std::uint64_t>();
        m.corpus_dir = j.at("corpus_dir").get<std::string>();
        m.range = range_from_json(j.at("rain_range"));
        if (!j.at("sharpness_bin").is_null()) m.sharpness_bin = parse_bin(j.at("sharpness_bin").get<std::string>());
        for (const auto& je : j.at("entries")) {
            ManifestEntry e;
            e.stem = je.at("stem").get<std::string>();
            e.source = je.at("source").get<std::string>();
            e.y = je.at("y").get<int>();
            e.x = je.at("x").get<int>();
            e.sharpness = je.at("sharpness").get<double>();
            e.bin = je.at("bin").get<std::string>();
            e.seed = je.at("seed").get<std::uint64_t>();
            m.entries.push_back(std::move(e));
        }
        return m;
    } catch (const nlohmann::json::exception& ex) {
        throw DataError(std::string("malformed manifest: ") + ex.what());
    }
}

void save_manifest(const DatasetManifest& m, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write manifest '" + path.string() + "'");
    os << to_json(m).dump(2) << '\n';
}

DatasetManifest load_manifest(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read manifest '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& ex) {
        throw DataError("manifest '" + path.string() + "' is not valid JSON: " + ex.what());
    }
    return manifest_from_json(j);
}

std::string stem_for(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu", index);
    return buf;
}

fs::path background_path(const fs::path& dir, const std::string& stem) { return dir / "backgrounds" / (stem + ".png"); }
fs::path rain_path(const fs::path& dir, const std::string& stem) { return dir / "rain" / (stem + ".png"); }
fs::path rainy_path(const fs::path& dir, const std::string& stem) { return dir / "rainy" / (stem + ".png"); }

void materialize(const DatasetManifest& m, const fs::path& dataset_dir) {
    const fs::path corpus(m.corpus_dir);
    std::vector<fs::path> sources;
    std::map<std::string, std::size_t> index_of;
    std::vector<CropRef> crops;
    for (const auto& e : m.entries) {
        auto [it, inserted] = index_of.emplace(e.source, sources.size());
        if (inserted) {
            const fs::path p = corpus / e.source;
            if (!fs::exists(p)) throw IoError("manifest source '" + p.string() + "' does not exist");
            sources.push_back(p);
        }
        crops.push_back({it->second, e.y, e.x});
    }
    for (const char* sub : {"backgrounds", "rain", "rainy"}) fs::create_directories(dataset_dir / sub);
    for_each_crop_grouped(sources, crops, m.patch_size, [&](std::size_t i, Image bg) {
        const auto& e = m.entries[i];
        // Quantize rain before composing so the stored triple satisfies
        // rainy == clip(background + rain) exactly in 8-bit.
        const RainField r = quantized(rain::render_rain(m.range, m.patch_size, m.patch_size, e.seed));
        save_image(bg, background_path(dataset_dir, e.stem));
        save_rain(r, rain_path(dataset_dir, e.stem));
        save_image(compose(bg, r), rainy_path(dataset_dir, e.stem));
    });
}

DatasetManifest build_dataset(const BuildOptions& opts) {
    opts.range.validate();
    if (opts.patch_size < 16) throw DataError("patch size must be >= 16 for rain rendering");
    const auto sources = list_corpus(opts.corpus_dir);
    CropSampler sampler(read_all_dims(sources), opts.patch_size, derive_seed(opts.seed, {1}));

    DatasetManifest m;
    m.id = opts.id;
    m.corpus_dir = fs::absolute(opts.corpus_dir).lexically_normal().string();
    m.patch_size = opts.patch_size;
    m.split = opts.split;
    m.creation_seed = opts.seed;
    m.range = opts.range;
    m.sharpness_bin = opts.sharpness_bin;

    std::vector<CropRef> chosen;
    std::vector<double> chosen_sharpness;
    std::size_t examined = 0;
    while (chosen.size() < opts.count) {
        const std::size_t need = opts.count - chosen.size();
        std::vector<CropRef> batch;
        if (!opts.sharpness_bin) {
            for (std::size_t i = 0; i < need; ++i) batch.push_back(sampler.next());
        } else {
            const std::size_t want = std::max<std::size_t>(64, 2 * need);
            while (batch.size() < want) {
                auto c = sampler.next_distinct();
                if (!c) break;
                batch.push_back(*c);
            }
            if (batch.empty()) {
                throw DataError("insufficient patches in sharpness bin '" + to_string(*opts.sharpness_bin) +
                                "': need " + std::to_string(opts.count) + ", found " +
                                std::to_string(chosen.size()) + " among " + std::to_string(examined) +
                                " distinct crops (shortfall " + std::to_string(need) + ")");
            }
        }
        examined += batch.size();
        std::vector<double> s(batch.size());
        for_each_crop_grouped(sources, batch, opts.patch_size,
                              [&](std::size_t i, const Image& img) { s[i] = sharpness(img); });
        for (std::size_t i = 0; i < batch.size() && chosen.size() < opts.count; ++i) {
            if (opts.sharpness_bin && !in_bin(s[i], *opts.sharpness_bin)) continue;
            chosen.push_back(batch[i]);
            chosen_sharpness.push_back(s[i]);
        }
    }

    std::set<std::uint64_t> used_seeds;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        ManifestEntry e;
        e.stem = stem_for(i);
        e.source = sources[chosen[i].source].filename().string();
        e.y = chosen[i].y;
        e.x = chosen[i].x;
        e.sharpness = chosen_sharpness[i];
        e.bin = bin_name(e.sharpness);
        std::uint64_t salt = 0;
        do {
            e.seed = derive_seed(opts.seed, {2, i, salt++});
        } while (!used_seeds.insert(e.seed).second);
        m.entries.push_back(std::move(e));
    }

    const fs::path dir = opts.out_dir / opts.id;
    materialize(m, dir);
    save_manifest(m, dir / "manifest.json");
    return m;
}

}  // namespace rainlab::dataset
