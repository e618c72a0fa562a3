#include "kerrsol/output.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "kerrsol/error.hpp"

namespace kerrsol {

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";  // folds -0
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return {buf.data(), res.ptr};
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int k = 15; k >= 0; --k) {
        s[static_cast<std::size_t>(k)] = digits[h & 0xf];
        h >>= 4;
    }
    return s;
}

void write_provenance(std::ostream& os, const Provenance& p) {
    os << "# kerrsol " << p.version << '\n';
    os << "# scenario: " << p.scenario << '\n';
    os << "# config_hash: " << p.config_hash << '\n';
    os << "# zeta:";
    for (double z : p.zeta) os << ' ' << format_number(z);
    os << '\n';
    os << "# lo: " << p.lo << '\n';
    os << "# basis: " << p.basis << '\n';
    os << "# seed: " << p.seed << '\n';
    for (const auto& n : p.notes) os << "# note: " << n << '\n';
    std::istringstream cfg(p.config_text);
    for (std::string line; std::getline(cfg, line);)
        if (!line.empty()) os << "# config: " << line << '\n';
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::add_row(std::vector<double> row) {
    if (row.size() != columns_.size()) throw Error(ErrorCode::InvalidArgument, "CSV row width mismatch");
    rows_.push_back(std::move(row));
}

std::vector<double> CsvTable::column(std::size_t k) const {
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(r.at(k));
    return out;
}

void CsvTable::write(std::ostream& os, const Provenance& p) const {
    write_provenance(os, p);
    for (std::size_t k = 0; k < columns_.size(); ++k) os << (k ? "," : "") << columns_[k];
    os << '\n';
    for (const auto& r : rows_) {
        for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << format_number(r[k]);
        os << '\n';
    }
}

void CsvTable::save(const std::filesystem::path& path, const Provenance& p) const {
    std::ostringstream os;
    write(os, p);
    save_text(path, os.str());
}

CsvTable matrix_triplets(const std::vector<double>& axis, const Eigen::MatrixXd& m, std::string value_name) {
    CsvTable t({"x", "x_prime", std::move(value_name)});
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            t.add_row({axis.at(static_cast<std::size_t>(i)), axis.at(static_cast<std::size_t>(j)), m(i, j)});
    return t;
}

void save_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

namespace {

constexpr double W = 640, H = 420, ML = 70, MR = 20, MT = 40, MB = 55;

std::string esc(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(4);
    os << x;
    return os.str();
}

// Rounded tick step giving about five intervals.
double tick_step(double span) {
    if (!(span > 0.0)) return 1.0;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag) return m * mag;
    return 10.0 * mag;
}

const char* palette(std::size_t k) {
    static constexpr std::array<const char*, 6> c{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
    return c[k % c.size()];
}

}  // namespace

std::string render_svg(const LinePlot& plot) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : plot.series)
        for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            x0 = std::min(x0, s.x[k]);
            x1 = std::max(x1, s.x[k]);
            y0 = std::min(y0, s.y[k]);
            y1 = std::max(y1, s.y[k]);
        }
    for (double r : plot.reference_lines) {
        y0 = std::min(y0, r);
        y1 = std::max(y1, r);
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return ML + (x - x0) / (x1 - x0) * (W - ML - MR); };
    auto py = [&](double y) { return H - MB - (y - y0) / (y1 - y0) * (H - MT - MB); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << esc(plot.title) << "</text>\n";
    os << "<rect x=\"" << ML << "\" y=\"" << MT << "\" width=\"" << W - ML - MR << "\" height=\"" << H - MT - MB
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    const double sx = tick_step(x1 - x0), sy = tick_step(y1 - y0);
    for (double t = std::ceil(x0 / sx) * sx; t <= x1 + 1e-9 * sx; t += sx)
        os << "<text x=\"" << px(t) << "\" y=\"" << H - MB + 16 << "\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
    for (double t = std::ceil(y0 / sy) * sy; t <= y1 + 1e-9 * sy; t += sy)
        os << "<text x=\"" << ML - 6 << "\" y=\"" << py(t) + 4 << "\" text-anchor=\"end\">" << fmt(t) << "</text>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << esc(plot.x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << H / 2 << ")\">"
       << esc(plot.y_label) << "</text>\n";
    for (double r : plot.reference_lines)
        os << "<line x1=\"" << ML << "\" x2=\"" << W - MR << "\" y1=\"" << py(r) << "\" y2=\"" << py(r)
           << "\" stroke=\"gray\" stroke-dasharray=\"2,3\"/>\n";
    for (std::size_t k = 0; k < plot.series.size(); ++k) {
        const auto& s = plot.series[k];
        os << "<polyline fill=\"none\" stroke=\"" << palette(k) << "\" stroke-width=\"1.5\""
           << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
        for (std::size_t j = 0; j < std::min(s.x.size(), s.y.size()); ++j)
            if (std::isfinite(s.x[j]) && std::isfinite(s.y[j])) os << px(s.x[j]) << ',' << py(s.y[j]) << ' ';
        os << "\"/>\n";
        const double ly = MT + 16 + 16 * static_cast<double>(k);
        os << "<line x1=\"" << W - MR - 150 << "\" x2=\"" << W - MR - 130 << "\" y1=\"" << ly - 4 << "\" y2=\"" << ly - 4
           << "\" stroke=\"" << palette(k) << "\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
        os << "<text x=\"" << W - MR - 124 << "\" y=\"" << ly << "\">" << esc(s.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string render_svg(const Heatmap& map) {
    const auto n = map.values.rows();
    const double side = H - MT - MB;
    const double cell = n > 0 ? side / static_cast<double>(n) : side;
    const double vmax = std::max(map.values.size() ? map.values.cwiseAbs().maxCoeff() : 0.0, 1e-300);
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << esc(map.title) << "</text>\n";
    // Diverging scale: blue negative, white zero, red positive.
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < map.values.cols(); ++j) {
            const double t = std::clamp(map.values(i, j) / vmax, -1.0, 1.0);
            const int fade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(t))));
            const int r = t >= 0 ? 255 : fade, b = t <= 0 ? 255 : fade;
            os << "<rect x=\"" << ML + cell * static_cast<double>(j) << "\" y=\""
               << MT + cell * static_cast<double>(n - 1 - i) << "\" width=\"" << cell + 0.05 << "\" height=\""
               << cell + 0.05 << "\" fill=\"rgb(" << r << ',' << fade << ',' << b << ")\"/>\n";
        }
    os << "<rect x=\"" << ML << "\" y=\"" << MT << "\" width=\"" << side << "\" height=\"" << side
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    if (!map.axis.empty()) {
        os << "<text x=\"" << ML << "\" y=\"" << H - MB + 16 << "\">" << fmt(map.axis.front()) << "</text>\n";
        os << "<text x=\"" << ML + side << "\" y=\"" << H - MB + 16 << "\" text-anchor=\"end\">" << fmt(map.axis.back())
           << "</text>\n";
    }
    os << "<text x=\"" << ML + side / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">x</text>\n";
    os << "<text x=\"" << ML + side + 20 << "\" y=\"" << MT + 12 << "\">max |C| = " << fmt(vmax) << "</text>\n";
    os << "<text x=\"" << ML + side + 20 << "\" y=\"" << MT + 30 << "\">red &gt; 0, blue &lt; 0</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace kerrsol
