#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "nullgeo/errors.hpp"

namespace nullgeo {

/// Column-oriented numeric table written as CSV. The first line names the
/// schema and its version, the second carries `name[unit]` headers.
struct CsvTable {
    std::string schema;  // e.g. "trajectory/1"
    std::vector<std::string> columns;
    std::vector<std::string> units;
    std::vector<std::vector<double>> rows;

    void add_column(std::string name, std::string unit) {
        columns.push_back(std::move(name));
        units.push_back(std::move(unit));
    }
    void add_row(std::vector<double> row) {
        if (row.size() != columns.size()) throw UsageError("csv row width does not match header");
        rows.push_back(std::move(row));
    }

    std::string str() const {
        std::string out = "# schema=" + schema + "\n";
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) out += ',';
            out += columns[i] + "[" + units[i] + "]";
        }
        out += '\n';
        char buf[40];
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out += ',';
                std::snprintf(buf, sizeof buf, "%.17g", row[i]);
                out += buf;
            }
            out += '\n';
        }
        return out;
    }

    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error("cannot open " + path + " for writing");
        f << str();
    }
};

}  // namespace nullgeo
