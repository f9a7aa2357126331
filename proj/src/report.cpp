#include "dmw/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>

#include "dmw/error.hpp"

namespace dmw {

const char* library_version() noexcept { return DMW_VERSION; }

nlohmann::json Manifest::to_json() const {
    nlohmann::json j{{"command", command},
                     {"seed", seed},
                     {"version", library_version()},
                     {"estimator", estimator},
                     {"samples", samples}};
    j["stderr"] = std_error ? nlohmann::json(*std_error) : nlohmann::json(nullptr);
    return j;
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 15);
    return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<CsvColumn> columns) : columns_(std::move(columns)) {}

void CsvTable::add_row(std::vector<Cell> row) {
    if (row.size() != columns_.size()) fail(ErrorCode::BadParams, "CSV row width does not match the header");
    rows_.push_back(std::move(row));
}

std::string CsvTable::render(const Manifest& manifest) const {
    std::string out;
    out += "# " + manifest.to_json().dump() + "\n";
    for (const auto& c : columns_) {
        out += "# " + c.name + " [" + c.unit + "]: " + c.description + "\n";
    }
    for (std::size_t k = 0; k < columns_.size(); ++k) {
        out += (k ? "," : "") + columns_[k].name;
    }
    out += "\n";
    for (const auto& row : rows_) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) out += ",";
            if (const auto* d = std::get_if<double>(&row[k])) {
                out += format_number(*d);
            } else if (const auto* i = std::get_if<long long>(&row[k])) {
                out += std::to_string(*i);
            } else {
                out += std::get<std::string>(row[k]);
            }
        }
        out += "\n";
    }
    return out;
}

void write_text(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) fail(ErrorCode::BadParams, "cannot open '" + path + "' for writing");
    file << text;
    if (!file) fail(ErrorCode::BadParams, "failed writing '" + path + "'");
}

}  // namespace dmw
