#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rainlab/csv.hpp"

namespace rainlab::plot {

struct PlotSpec {
    std::string title;
    std::string x;               // x column
    std::vector<std::string> y;  // one series per column
    std::string group;           // optional: split every y column by this column's values
    bool log_x = false;
    int width = 640;
    int height = 400;
};

// Line chart as SVG text. Rows are drawn in file order. Output depends only
// on the inputs (no ids from counters or clocks). Throws DataError on a
// missing column or a nonpositive x with log_x.
std::string render_svg(const csv::Table& table, const PlotSpec& spec);

void plot_csv(const std::filesystem::path& csv_in, const PlotSpec& spec, const std::filesystem::path& svg_out);

}  // namespace rainlab::plot
