#include "dlab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dlab::io {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void write_csv(const std::string& path, const Csv& csv) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    for (size_t i = 0; i < csv.header.size(); ++i) {
        if (i) out << ',';
        out << csv.header[i];
    }
    out << '\n';
    for (const auto& row : csv.rows) {
        if (row.size() != csv.header.size()) {
            throw std::invalid_argument("write_csv: row width " + std::to_string(row.size()) +
                                        " vs header width " + std::to_string(csv.header.size()));
        }
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << fmt(row[i]);
        }
        out << '\n';
    }
}

Csv read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path);
    Csv csv;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_csv: empty file " + path);
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) csv.header.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != csv.header.size()) {
            throw std::runtime_error("read_csv: ragged row in " + path);
        }
        csv.rows.push_back(std::move(row));
    }
    return csv;
}

void ensure_dir(const std::string& path) { std::filesystem::create_directories(path); }

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 62;
constexpr int kMarginRight = 18;
constexpr int kMarginTop = 34;
constexpr int kMarginBottom = 46;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

struct Range {
    double lo = 0.0, hi = 1.0;
    void expand(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad() {
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        } else {
            const double m = 0.04 * (hi - lo);
            lo -= m;
            hi += m;
        }
    }
};

double map_x(double v, const Range& r) {
    return kMarginLeft + (v - r.lo) / (r.hi - r.lo) * (kWidth - kMarginLeft - kMarginRight);
}

double map_y(double v, const Range& r) {
    return kHeight - kMarginBottom -
           (v - r.lo) / (r.hi - r.lo) * (kHeight - kMarginTop - kMarginBottom);
}

void svg_header(std::ofstream& out) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
        << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
}

void svg_axes(std::ofstream& out, const std::string& title, const std::string& xlabel,
              const std::string& ylabel, const Range& xr, const Range& yr) {
    out << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\" "
        << "font-family=\"sans-serif\">" << title << "</text>\n";
    const int x0 = kMarginLeft, y0 = kHeight - kMarginBottom;
    out << "<line x1=\"" << x0 << "\" y1=\"" << kMarginTop << "\" x2=\"" << x0 << "\" y2=\"" << y0
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << kWidth - kMarginRight
        << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
        const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
        out << "<text x=\"" << fmt(map_x(xv, xr)) << "\" y=\"" << y0 + 16
            << "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">"
            << fmt(xv) << "</text>\n";
        out << "<text x=\"" << x0 - 6 << "\" y=\"" << fmt(map_y(yv, yr) + 3)
            << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">" << fmt(yv)
            << "</text>\n";
    }
    out << "<text x=\"" << (kMarginLeft + kWidth - kMarginRight) / 2 << "\" y=\""
        << kHeight - 10 << "\" text-anchor=\"middle\" font-size=\"12\" "
        << "font-family=\"sans-serif\">" << xlabel << "</text>\n";
    out << "<text x=\"14\" y=\"" << (kMarginTop + kHeight - kMarginBottom) / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" "
        << "transform=\"rotate(-90 14 " << (kMarginTop + kHeight - kMarginBottom) / 2 << ")\">"
        << ylabel << "</text>\n";
}

}  // namespace

void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<Series>& series) {
    if (series.empty()) throw std::invalid_argument("write_line_svg: no series");
    Range xr, yr;
    bool first = true;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size() || s.x.empty()) {
            throw std::invalid_argument("write_line_svg: series '" + s.label + "' malformed");
        }
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                xr.lo = xr.hi = s.x[i];
                yr.lo = yr.hi = s.y[i];
                first = false;
            }
            xr.expand(s.x[i]);
            yr.expand(s.y[i]);
        }
    }
    xr.pad();
    yr.pad();

    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_line_svg: cannot open " + path);
    svg_header(out);
    svg_axes(out, title, xlabel, ylabel, xr, yr);
    int color = 0;
    for (const auto& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << kPalette[color % 6]
            << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (i) out << ' ';
            out << fmt(map_x(s.x[i], xr)) << ',' << fmt(map_y(s.y[i], yr));
        }
        out << "\"/>\n";
        out << "<text x=\"" << kWidth - kMarginRight - 6 << "\" y=\""
            << kMarginTop + 14 * (color + 1) << "\" text-anchor=\"end\" font-size=\"11\" "
            << "font-family=\"sans-serif\" fill=\"" << kPalette[color % 6] << "\">" << s.label
            << "</text>\n";
        ++color;
    }
    out << "</svg>\n";
}

void write_histogram_svg(const std::string& path, const std::string& title,
                         const std::string& xlabel, const std::vector<double>& values, int bins,
                         double vline) {
    if (values.empty()) throw std::invalid_argument("write_histogram_svg: no values");
    Range xr;
    xr.lo = xr.hi = values[0];
    for (double v : values) xr.expand(v);
    if (!std::isnan(vline)) xr.expand(vline);
    xr.pad();

    std::vector<int> counts(bins, 0);
    for (double v : values) {
        int b = static_cast<int>((v - xr.lo) / (xr.hi - xr.lo) * bins);
        b = std::clamp(b, 0, bins - 1);
        ++counts[b];
    }
    Range yr;
    yr.lo = 0.0;
    yr.hi = 1.0;
    for (int c : counts) yr.expand(static_cast<double>(c));
    yr.pad();
    yr.lo = 0.0;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_histogram_svg: cannot open " + path);
    svg_header(out);
    svg_axes(out, title, xlabel, "count", xr, yr);
    const double bw = (xr.hi - xr.lo) / bins;
    for (int b = 0; b < bins; ++b) {
        if (counts[b] == 0) continue;
        const double x = map_x(xr.lo + b * bw, xr);
        const double x2 = map_x(xr.lo + (b + 1) * bw, xr);
        const double y = map_y(counts[b], yr);
        const double y0 = map_y(0.0, yr);
        out << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(x2 - x)
            << "\" height=\"" << fmt(y0 - y) << "\" fill=\"#1f77b4\" stroke=\"white\"/>\n";
    }
    if (!std::isnan(vline)) {
        const double x = map_x(vline, xr);
        out << "<line x1=\"" << fmt(x) << "\" y1=\"" << kMarginTop << "\" x2=\"" << fmt(x)
            << "\" y2=\"" << kHeight - kMarginBottom
            << "\" stroke=\"red\" stroke-dasharray=\"4,3\"/>\n";
    }
    out << "</svg>\n";
}

void write_heatmap_svg(const std::string& path, const std::string& title, const Matrix& m) {
    if (m.empty()) throw std::invalid_argument("write_heatmap_svg: empty matrix");
    const double peak = max_abs(m);
    const double cell = std::max(1.0, 512.0 / std::max(m.rows, m.cols));
    const int w = static_cast<int>(cell * m.cols) + 20;
    const int h = static_cast<int>(cell * m.rows) + 40;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_heatmap_svg: cannot open " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\">\n<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n"
        << "<text x=\"" << w / 2 << "\" y=\"16\" text-anchor=\"middle\" font-size=\"12\" "
        << "font-family=\"sans-serif\">" << title << "</text>\n";
    for (int i = 0; i < m.rows; ++i) {
        for (int j = 0; j < m.cols; ++j) {
            const double v = peak > 0.0 ? std::abs(m.at(i, j)) / peak : 0.0;
            const int gray = static_cast<int>(std::lround(255.0 * (1.0 - v)));
            out << "<rect x=\"" << fmt(10 + j * cell) << "\" y=\"" << fmt(30 + i * cell)
                << "\" width=\"" << fmt(cell) << "\" height=\"" << fmt(cell) << "\" fill=\"rgb("
                << gray << ',' << gray << ',' << gray << ")\"/>\n";
        }
    }
    out << "</svg>\n";
}

void plot_csv(const std::string& csv_path, const std::string& kind,
              const std::string& out_path) {
    const Csv csv = read_csv(csv_path);
    if (csv.rows.empty()) {
        throw std::invalid_argument("plot_csv: no data rows in " + csv_path);
    }
    if (kind == "line") {
        if (csv.header.size() < 2) {
            throw std::invalid_argument("plot_csv: line plot needs an x column plus series");
        }
        std::vector<Series> series(csv.header.size() - 1);
        for (size_t s = 0; s < series.size(); ++s) series[s].label = csv.header[s + 1];
        for (const auto& row : csv.rows) {
            for (size_t s = 0; s < series.size(); ++s) {
                series[s].x.push_back(row[0]);
                series[s].y.push_back(row[s + 1]);
            }
        }
        write_line_svg(out_path, csv_path.substr(csv_path.find_last_of('/') + 1),
                       csv.header[0], series.size() == 1 ? series[0].label : "value", series);
    } else if (kind == "hist") {
        if (csv.header.size() != 1 && csv.header.size() != 2) {
            throw std::invalid_argument("plot_csv: hist expects one value column or class,value");
        }
        const size_t col = csv.header.size() - 1;
        std::vector<double> values;
        values.reserve(csv.rows.size());
        for (const auto& row : csv.rows) values.push_back(row[col]);
        // class,value schema marks the ln(#classes) reference
        const double vline =
            csv.header.size() == 2 ? std::log(static_cast<double>(csv.rows.size())) : NAN;
        write_histogram_svg(out_path, csv_path.substr(csv_path.find_last_of('/') + 1),
                            csv.header[col], values, 24, vline);
    } else {
        throw std::invalid_argument("plot_csv: unknown kind '" + kind + "'");
    }
}

}  // namespace dlab::io
