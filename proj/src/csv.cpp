#include "rainlab/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rainlab/error.hpp"

namespace rainlab::csv {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw DataError("CSV has no column '" + name + "'");
}

bool Table::has_column(const std::string& name) const {
    for (const auto& h : header)
        if (h == name) return true;
    return false;
}

std::vector<double> Table::numbers(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(r.at(c), &used));
            if (used != r.at(c).size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw DataError("CSV column '" + name + "' holds a non-numeric value");
        }
    }
    return out;
}

std::vector<std::string> Table::strings(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<std::string> out;
    for (const auto& r : rows) out.push_back(r.at(c));
    return out;
}

void Table::add_row(std::vector<std::string> row) {
    if (row.size() != header.size()) throw DataError("CSV row width does not match the header");
    rows.push_back(std::move(row));
}

std::string number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string number(long long v) { return std::to_string(v); }

Table parse(const std::string& text) {
    Table t;
    std::istringstream is(text);
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != t.header.size()) throw DataError("CSV row width does not match the header: " + line);
            t.rows.push_back(std::move(cells));
        }
    }
    if (first) throw DataError("CSV is empty");
    return t;
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string format(const Table& t) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
    return out;
}

void write(const std::filesystem::path& path, const Table& t) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << format(t);
}

}  // namespace rainlab::csv
