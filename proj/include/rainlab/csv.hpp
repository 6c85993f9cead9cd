#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace rainlab::csv {

// Plain comma-separated table: no quoting, first line is the header.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Throws DataError when the column is absent.
    std::size_t column(const std::string& name) const;
    bool has_column(const std::string& name) const;
    std::vector<double> numbers(const std::string& name) const;
    std::vector<std::string> strings(const std::string& name) const;

    void add_row(std::vector<std::string> row);
};

// Round-trip formatting (17 significant digits).
std::string number(double v);
std::string number(long long v);

Table parse(const std::string& text);
Table read(const std::filesystem::path& path);
std::string format(const Table& t);
void write(const std::filesystem::path& path, const Table& t);

}  // namespace rainlab::csv
