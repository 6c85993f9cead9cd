#include <doctest.h>

#include "rainlab/csv.hpp"
#include "rainlab/error.hpp"
#include "rainlab/plot.hpp"
#include "support.hpp"

using namespace rainlab;

namespace {

std::size_t count_of(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
    return n;
}

std::size_t vertices(const std::string& svg) {
    const auto start = svg.find("points=\"");
    if (start == std::string::npos) return 0;
    const auto end = svg.find('"', start + 8);
    const std::string pts = svg.substr(start + 8, end - start - 8);
    return static_cast<std::size_t>(std::count(pts.begin(), pts.end(), ',') );
}

}  // namespace

TEST_CASE("csv round trip and number formatting") {
    csv::Table t{{"a", "b"}, {}};
    t.add_row({csv::number(0.1), csv::number(static_cast<long long>(7))});
    t.add_row({csv::number(1.0 / 3.0), "x"});
    const auto back = csv::parse(csv::format(t));
    CHECK(back.header == t.header);
    CHECK(back.rows == t.rows);
    CHECK(back.numbers("a")[1] == 1.0 / 3.0);
    CHECK_THROWS_AS(back.numbers("b"), DataError);
    CHECK_THROWS_AS(back.column("c"), DataError);
    CHECK_THROWS_AS(t.add_row({"1"}), DataError);
    CHECK_THROWS_AS(csv::parse("a,b\n1\n"), DataError);
}

TEST_CASE("empty data gives axes only") {
    csv::Table t{{"x", "y"}, {}};
    plot::PlotSpec s;
    s.x = "x";
    s.y = {"y"};
    const auto svg = plot::render_svg(t, s);
    CHECK(svg.find("<svg") == 0);
    CHECK(count_of(svg, "<polyline") == 0);
    CHECK(count_of(svg, "id=\"axes\"") == 1);
}

TEST_CASE("one polyline per series with one vertex per row") {
    csv::Table t{{"x", "y", "z", "g"}, {}};
    for (int i = 0; i < 9; ++i)
        t.add_row({csv::number(static_cast<long long>(i)), csv::number(i * 0.5), csv::number(-i * 1.0), i < 4 ? "a" : "b"});
    plot::PlotSpec s;
    s.x = "x";
    s.y = {"y"};
    const auto one = plot::render_svg(t, s);
    CHECK(count_of(one, "<polyline") == 1);
    CHECK(vertices(one) == 9);
    s.y = {"y", "z"};
    CHECK(count_of(plot::render_svg(t, s), "<polyline") == 2);
    s.group = "g";
    CHECK(count_of(plot::render_svg(t, s), "<polyline") == 4);
}

TEST_CASE("svg bytes are reproducible") {
    testing::TempDir dir;
    csv::Table t{{"count", "E_R"}, {}};
    for (int c : {8, 64, 512, 2048}) t.add_row({csv::number(static_cast<long long>(c)), csv::number(100.0 / c)});
    csv::write(dir / "in.csv", t);
    plot::PlotSpec s;
    s.x = "count";
    s.y = {"E_R"};
    s.log_x = true;
    plot::plot_csv(dir / "in.csv", s, dir / "a.svg");
    plot::plot_csv(dir / "in.csv", s, dir / "b.svg");
    CHECK(testing::read_file(dir / "a.svg") == testing::read_file(dir / "b.svg"));
}

TEST_CASE("plot input errors") {
    csv::Table t{{"x", "y"}, {{"0", "1"}}};
    plot::PlotSpec s;
    s.x = "x";
    s.y = {"missing"};
    CHECK_THROWS_AS(plot::render_svg(t, s), DataError);
    s.y = {"y"};
    s.log_x = true;
    CHECK_THROWS_AS(plot::render_svg(t, s), DataError);
}
