#include "cli/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "csl/error.hpp"

namespace csl::cli {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_cell(const std::string& cell, const std::string& where) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || cell.empty())
        fail(ErrorCode::ParseError, where + ": cannot parse '" + cell + "' as a number");
    if (!std::isfinite(v)) fail(ErrorCode::NonFinite, where + ": non-finite value '" + cell + "'");
    return v;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::ParseError, "cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::ParseError, "cannot open '" + path + "' for writing");
    return out;
}

}  // namespace

std::string format_double(double v) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.17g", v);
    return buf.data();
}

Matrix read_matrix_csv(const std::string& path, bool header) {
    std::ifstream in = open_in(path);
    std::vector<double> values;
    std::size_t cols = 0, rows = 0, line_no = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (header && line_no == 1) continue;
        if (trim(line).empty()) continue;
        std::size_t count = 0;
        std::stringstream ss(line);
        std::string cell;
        const std::string where = path + ":" + std::to_string(line_no);
        while (std::getline(ss, cell, ',')) {
            values.push_back(parse_cell(trim(cell), where));
            ++count;
        }
        if (!line.empty() && line.back() == ',') fail(ErrorCode::ParseError, where + ": trailing comma");
        if (rows == 0) cols = count;
        if (count != cols)
            fail(ErrorCode::ParseError,
                 where + ": expected " + std::to_string(cols) + " columns, found " + std::to_string(count));
        ++rows;
    }
    if (rows == 0) fail(ErrorCode::ParseError, path + ": no data rows");
    return Matrix(rows, cols, std::move(values));
}

void write_matrix_csv(const std::string& path, const Matrix& m, const std::vector<std::string>& header) {
    std::ofstream out = open_out(path);
    if (!header.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
        out << '\n';
    }
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
        out << '\n';
    }
}

std::vector<int> read_labels(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        int v = 0;
        const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || ptr != t.data() + t.size() || v < 0)
            fail(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": labels must be nonnegative integers");
        labels.push_back(v);
    }
    return labels;
}

void write_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream out = open_out(path);
    for (int l : labels) out << l << '\n';
}

Subspace read_basis(const std::string& path) {
    const Matrix rows = read_matrix_csv(path);
    require(rows.rows() <= rows.cols(), ErrorCode::BadDims,
            path + ": " + std::to_string(rows.rows()) + " spanning vectors exceed ambient dimension " +
                std::to_string(rows.cols()));
    return Subspace::span_of(rows.transposed());
}

void write_basis(const std::string& path, const Subspace& s) { write_matrix_csv(path, s.basis().transposed()); }

void write_coords_csv(const std::string& path, const Matrix& coords, const std::vector<int>& labels) {
    static const char* names[] = {"x", "y", "z"};
    std::ofstream out = open_out(path);
    for (std::size_t j = 0; j < coords.cols(); ++j) out << names[j] << ',';
    out << "label\n";
    for (std::size_t i = 0; i < coords.rows(); ++i) {
        for (std::size_t j = 0; j < coords.cols(); ++j) out << format_double(coords(i, j)) << ',';
        out << labels[i] << '\n';
    }
}

std::string scatter_svg(const Matrix& coords, const std::vector<int>& labels) {
    static constexpr std::array<const char*, 8> palette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                           "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    constexpr double canvas = 600.0;  // longest data extent maps to this many px
    double xmin = coords(0, 0), xmax = xmin, ymin = coords(0, 1), ymax = ymin;
    for (std::size_t i = 0; i < coords.rows(); ++i) {
        xmin = std::min(xmin, coords(i, 0));
        xmax = std::max(xmax, coords(i, 0));
        ymin = std::min(ymin, coords(i, 1));
        ymax = std::max(ymax, coords(i, 1));
    }
    const double extent = std::max({xmax - xmin, ymax - ymin, 1e-300});
    const double scale = canvas / extent;
    const double w = (xmax - xmin) * scale, h = (ymax - ymin) * scale;
    const double mx = 0.05 * std::max(w, 1.0), my = 0.05 * std::max(h, 1.0);

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << format_double(-mx) << ' ' << format_double(-my)
        << ' ' << format_double(w + 2 * mx) << ' ' << format_double(h + 2 * my) << "\">\n";
    for (std::size_t i = 0; i < coords.rows(); ++i) {
        const double x = (coords(i, 0) - xmin) * scale;
        const double y = (ymax - coords(i, 1)) * scale;  // SVG y grows downward
        const int l = labels.empty() ? 0 : labels[i];
        svg << "  <circle cx=\"" << format_double(x) << "\" cy=\"" << format_double(y) << "\" r=\"3\" fill=\""
            << palette[static_cast<std::size_t>(l) % palette.size()] << "\"/>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string read_text(const std::string& path) {
    std::ifstream in = open_in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out = open_out(path);
    out << text;
}

}  // namespace csl::cli
