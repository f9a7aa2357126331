#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace dmw {

const char* library_version() noexcept;

// Reproducibility block attached to every report.
struct Manifest {
    std::string command;
    std::uint64_t seed = 0;
    std::string estimator = "closed_form";
    std::size_t samples = 0;
    std::optional<double> std_error;

    nlohmann::json to_json() const;
};

// Shortest round-trip-safe text with at most 15 significant digits, '.' decimal, no locale.
std::string format_number(double x);

struct CsvColumn {
    std::string name;
    std::string unit;
    std::string description;
};

// CSV with '#' comment lines describing the manifest and each column, then one header row.
class CsvTable {
public:
    using Cell = std::variant<double, long long, std::string>;

    explicit CsvTable(std::vector<CsvColumn> columns);

    void add_row(std::vector<Cell> row);
    std::size_t rows() const { return rows_.size(); }
    std::string render(const Manifest& manifest) const;

private:
    std::vector<CsvColumn> columns_;
    std::vector<std::vector<Cell>> rows_;
};

// Writes text to path, or to stdout when path is empty or "-".
void write_text(const std::string& text, const std::string& path);

}  // namespace dmw
