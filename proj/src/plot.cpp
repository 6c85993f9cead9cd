#include "rainlab/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "rainlab/error.hpp"

namespace rainlab::plot {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Tick positions on a 1-2-5 step covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (span / step <= 6.0) break;
    }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    return out;
}

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

}  // namespace

std::string render_svg(const csv::Table& table, const PlotSpec& spec) {
    if (spec.width < 300 || spec.height < 200) throw Error("plot: canvas must be at least 300x200");
    const auto xs = table.numbers(spec.x);
    std::vector<Series> series;
    std::vector<std::string> groups;
    std::vector<std::size_t> group_of(table.rows.size(), 0);
    if (!spec.group.empty()) {
        const auto g = table.strings(spec.group);
        for (std::size_t i = 0; i < g.size(); ++i) {
            auto it = std::find(groups.begin(), groups.end(), g[i]);
            group_of[i] = static_cast<std::size_t>(it - groups.begin());
            if (it == groups.end()) groups.push_back(g[i]);
        }
    } else {
        groups.push_back("");
    }
    for (const auto& col : spec.y) {
        const auto ys = table.numbers(col);
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            Series s;
            s.name = groups[gi].empty() ? col : col + " " + spec.group + "=" + groups[gi];
            for (std::size_t i = 0; i < ys.size(); ++i) {
                if (group_of[i] != gi || !std::isfinite(ys[i]) || !std::isfinite(xs[i])) continue;
                if (spec.log_x && xs[i] <= 0) throw DataError("plot: log x axis needs positive values in '" + spec.x + "'");
                s.points.emplace_back(spec.log_x ? std::log10(xs[i]) : xs[i], ys[i]);
            }
            series.push_back(std::move(s));
        }
    }

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            x0 = std::min(x0, x), x1 = std::max(x1, x);
            y0 = std::min(y0, y), y1 = std::max(y1, y);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad, y1 += pad;

    const double W = spec.width, H = spec.height;
    const double pw = W - kLeft - kRight, ph = H - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec.width) + "\" height=\"" +
         std::to_string(spec.height) + "\" viewBox=\"0 0 " + std::to_string(spec.width) + " " +
         std::to_string(spec.height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + fmt(W / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + escape(spec.title) + "</text>\n";
    s += "<g id=\"axes\" stroke=\"black\" fill=\"none\">\n";
    s += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop + ph) + "\" x2=\"" + fmt(kLeft + pw) + "\" y2=\"" + fmt(kTop + ph) + "\"/>\n";
    s += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(kLeft) + "\" y2=\"" + fmt(kTop + ph) + "\"/>\n";
    s += "</g>\n<g id=\"ticks\" fill=\"black\">\n";
    for (double t : ticks(x0, x1)) {
        const std::string text = spec.log_x ? label(std::pow(10.0, t)) : label(t);
        s += "<line x1=\"" + fmt(px(t)) + "\" y1=\"" + fmt(kTop + ph) + "\" x2=\"" + fmt(px(t)) + "\" y2=\"" + fmt(kTop + ph + 5) + "\" stroke=\"black\"/>";
        s += "<text x=\"" + fmt(px(t)) + "\" y=\"" + fmt(kTop + ph + 18) + "\" text-anchor=\"middle\">" + text + "</text>\n";
    }
    for (double t : ticks(y0, y1)) {
        s += "<line x1=\"" + fmt(kLeft - 5) + "\" y1=\"" + fmt(py(t)) + "\" x2=\"" + fmt(kLeft) + "\" y2=\"" + fmt(py(t)) + "\" stroke=\"black\"/>";
        s += "<text x=\"" + fmt(kLeft - 8) + "\" y=\"" + fmt(py(t) + 4) + "\" text-anchor=\"end\">" + label(t) + "</text>\n";
    }
    s += "</g>\n";
    s += "<text x=\"" + fmt(kLeft + pw / 2) + "\" y=\"" + fmt(H - 10) + "\" text-anchor=\"middle\">" + escape(spec.x) + (spec.log_x ? " (log)" : "") + "</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kPalette[i % std::size(kPalette)];
        if (!series[i].points.empty()) {
            s += "<polyline id=\"series-" + std::to_string(i) + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t k = 0; k < series[i].points.size(); ++k) {
                if (k) s += ' ';
                s += fmt(px(series[i].points[k].first)) + "," + fmt(py(series[i].points[k].second));
            }
            s += "\"/>\n";
        }
        const double ly = kTop + 10 + 16.0 * static_cast<double>(i);
        s += "<line x1=\"" + fmt(W - kRight + 10) + "\" y1=\"" + fmt(ly) + "\" x2=\"" + fmt(W - kRight + 30) + "\" y2=\"" + fmt(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>";
        s += "<text x=\"" + fmt(W - kRight + 34) + "\" y=\"" + fmt(ly + 4) + "\">" + escape(series[i].name) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

void plot_csv(const std::filesystem::path& csv_in, const PlotSpec& spec, const std::filesystem::path& svg_out) {
    const std::string svg = render_svg(csv::read(csv_in), spec);
    if (svg_out.has_parent_path()) std::filesystem::create_directories(svg_out.parent_path());
    std::ofstream out(svg_out, std::ios::binary);
    if (!out) throw IoError("cannot write '" + svg_out.string() + "'");
    out << svg;
}

}  // namespace rainlab::plot
