#include <doctest.h>

#include <sstream>

#include "rainlab/cli.hpp"
#include "rainlab/csv.hpp"
#include "rainlab/dataset.hpp"
#include "rainlab/image.hpp"
#include "rainlab/metrics.hpp"
#include "rainlab/procedural.hpp"
#include "support.hpp"

using namespace rainlab;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string p(const testing::TempDir& d, const std::string& rel) { return (d / rel).string(); }

}  // namespace

TEST_CASE("rain writes the layer, the streak log and its config") {
    testing::TempDir d;
    const auto r = run({"rain", "--preset", "medium", "--size", "128x128", "--seed", "7", "--out", p(d, "r.png")});
    REQUIRE(r.code == 0);
    const Image img = load_image(d / "r.png");
    CHECK(img.height == 128);
    const auto log = csv::read(d / "r.csv");
    CHECK(log.header == std::vector<std::string>{"cx", "cy", "length", "width", "angle", "peak"});
    CHECK(log.rows.size() >= 200);
    CHECK(log.rows.size() <= 300);
    CHECK(std::filesystem::exists(d / "r.config.json"));

    const auto again = run({"--config", p(d, "r.config.json"), "--out", p(d, "r2.png")});
    REQUIRE(again.code == 0);
    CHECK(testing::file_hash(d / "r.png") == testing::file_hash(d / "r2.png"));
    CHECK(testing::file_hash(d / "r.csv") == testing::file_hash(d / "r2.csv"));
}

TEST_CASE("usage errors exit 1 and data errors exit 2") {
    testing::TempDir d;
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"nope"}).code == cli::kExitUsage);
    CHECK(run({"rain", "--out", p(d, "r.png"), "--bogus"}).code == cli::kExitUsage);
    CHECK(run({"rain", "--out", p(d, "r.png"), "--size", "12by12"}).code == cli::kExitUsage);
    CHECK(run({"toy"}).code == cli::kExitUsage);
    CHECK(run({"eval", "--manifest", p(d, "missing.json"), "--pred-dir", p(d, "")}).code == cli::kExitData);
    CHECK(run({"rain", "--out", p(d, "r.png"), "--preset", "enormous"}).code == cli::kExitData);
    const auto h = run({"--help"});
    CHECK(h.code == 0);
    CHECK(h.out.find("toy") != std::string::npos);
}

TEST_CASE("build, rebuild from manifest, and eval by stem") {
    testing::TempDir d;
    write_procedural_corpus(d / "corpus", 6, 40, 40, 3, 4);
    REQUIRE(run({"build", "--corpus", p(d, "corpus"), "--out", p(d, "data"), "--id", "m", "--patch-size", "32",
                 "--count", "5", "--seed", "3"})
                .code == 0);
    const auto dir = d / "data" / "m";
    REQUIRE(run({"build", "--manifest", (dir / "manifest.json").string(), "--out", p(d, "again")}).code == 0);
    auto a = testing::tree_hashes(dir), b = testing::tree_hashes(d / "again");
    a.erase("config.json");
    b.erase("config.json");
    CHECK(a == b);

    // predictions equal to the rainy inputs: nothing removed
    std::filesystem::create_directories(d / "pred");
    for (const auto& f : std::filesystem::directory_iterator(dir / "rainy"))
        std::filesystem::copy_file(f.path(), d / "pred" / f.path().filename());
    const auto r = run({"eval", "--manifest", (dir / "manifest.json").string(), "--pred-dir", p(d, "pred"), "--t",
                        "0.0196", "--out", p(d, "report")});
    REQUIRE(r.code == 0);
    const auto report = metrics::report_from_json(nlohmann::json::parse(testing::read_file(d / "report" / "report.json")));
    CHECK(report.records.size() == 5);
    CHECK(report.mean_rain_removal == 0.0);
    CHECK(report.threshold == 0.0196);

    std::filesystem::remove(d / "pred" / "000002.png");
    const auto bad = run({"eval", "--manifest", (dir / "manifest.json").string(), "--pred-dir", p(d, "pred")});
    CHECK(bad.code == cli::kExitData);
    CHECK(bad.err.find("000002") != std::string::npos);
}

TEST_CASE("sharpness and complexity print CSV") {
    testing::TempDir d;
    write_procedural_corpus(d / "c", 3, 40, 40, 1, 4);
    const auto s = run({"sharpness", "--input", p(d, "c")});
    REQUIRE(s.code == 0);
    const auto st = csv::parse(s.out);
    CHECK(st.rows.size() == 4);
    CHECK(st.rows.back()[0] == "mean");
    const auto c = run({"complexity", "--input", p(d, "c"), "--patch-size", "32", "--samples", "5", "--out", p(d, "cx.csv")});
    REQUIRE(c.code == 0);
    CHECK(csv::read(d / "cx.csv").rows.size() == 6);
}

TEST_CASE("toy grid writes 18 cells") {
    testing::TempDir d;
    const auto r = run({"toy", "grid", "--seed", "1", "--epochs", "0", "--out", p(d, "grid")});
    REQUIRE(r.code == 0);
    CHECK(csv::read(d / "grid" / "grid.csv").rows.size() == 18);
    std::size_t csvs = 0, svgs = 0;
    for (const auto& f : std::filesystem::directory_iterator(d / "grid" / "cells")) {
        csvs += f.path().extension() == ".csv";
        svgs += f.path().extension() == ".svg";
    }
    CHECK(csvs == 18);
    CHECK(svgs == 18);
}

TEST_CASE("toy train reruns from its resolved config") {
    testing::TempDir d;
    REQUIRE(run({"toy", "train", "--order", "2", "--segments", "64", "--epochs", "1", "--seed", "5", "--out", p(d, "a")})
                .code == 0);
    REQUIRE(run({"--config", p(d, "a/config.json"), "--out", p(d, "b")}).code == 0);
    CHECK(testing::read_file(d / "a" / "trace.csv") == testing::read_file(d / "b" / "trace.csv"));
    CHECK(testing::read_file(d / "a" / "loss.csv") == testing::read_file(d / "b" / "loss.csv"));
    const auto e = run({"toy", "eval", "--checkpoint", p(d, "a/model.ckpt"), "--order", "2", "--noise-mean", "10",
                        "--noise-std", "5", "--out", p(d, "e")});
    REQUIRE(e.code == 0);
    CHECK(csv::read(d / "e" / "summary.csv").rows.size() == 1);
}

TEST_CASE("mini sweep on a generated corpus") {
    testing::TempDir d;
    const auto r = run({"mini", "sweep", "--procedural-corpus", "10", "--procedural-size", "48", "--counts", "4", "8",
                        "--iterations", "5", "--batch-size", "2", "--test-images", "4", "--out", p(d, "m")});
    REQUIRE(r.code == 0);
    CHECK(csv::read(d / "m" / "cells.csv").rows.size() == 2);
    CHECK(std::filesystem::exists(d / "m" / "E_R_vs_count.svg"));
    REQUIRE(run({"--config", p(d, "m/config.json"), "--out", p(d, "m2")}).code == 0);
    CHECK(testing::read_file(d / "m" / "cells.csv") == testing::read_file(d / "m2" / "cells.csv"));
}
