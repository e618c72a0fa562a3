#pragma once

// CSV tables with '#' provenance headers and minimal SVG plots.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace kerrsol {

/// Shortest round-trip decimal form; identical bytes on every run.
std::string format_number(double x);

/// 64-bit FNV-1a, rendered as 16 hex digits by hash_hex.
std::uint64_t fnv1a(std::string_view text);
std::string hash_hex(std::uint64_t h);

struct Provenance {
    std::string version;
    std::string scenario;
    std::string config_hash;
    std::string config_text;  // resolved configuration, one key = value per line
    std::vector<double> zeta;
    std::string lo;
    std::string basis;
    std::uint64_t seed = 0;
    std::vector<std::string> notes;
};

void write_provenance(std::ostream& os, const Provenance& p);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns);

    void add_row(std::vector<double> row);
    const std::vector<std::string>& columns() const noexcept { return columns_; }
    const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }
    std::vector<double> column(std::size_t k) const;

    void write(std::ostream& os, const Provenance& p) const;
    void save(const std::filesystem::path& path, const Provenance& p) const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<double>> rows_;
};

/// Dense matrix as (x, x', value) triplets.
CsvTable matrix_triplets(const std::vector<double>& axis, const Eigen::MatrixXd& m, std::string value_name);

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool dashed = false;
};

struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    std::vector<double> reference_lines;  // horizontal guides, e.g. the shot-noise level
};

struct Heatmap {
    std::string title;
    std::vector<double> axis;  // shared x and x' axis
    Eigen::MatrixXd values;
};

std::string render_svg(const LinePlot& plot);
std::string render_svg(const Heatmap& map);
void save_text(const std::filesystem::path& path, const std::string& text);

}  // namespace kerrsol
