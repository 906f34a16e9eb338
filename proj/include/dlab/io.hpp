#pragma once

#include <string>
#include <vector>

#include "dlab/matrix.hpp"

namespace dlab::io {

// Deterministic shortest-ish formatting; identical input bits give identical
// text, which the byte-reproducibility guarantees lean on.
std::string fmt(double v);

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

void write_csv(const std::string& path, const Csv& csv);
Csv read_csv(const std::string& path);

void ensure_dir(const std::string& path);

struct Series {
    std::string label;
    std::vector<double> x, y;
};

void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<Series>& series);

// vline: NaN disables the marker
void write_histogram_svg(const std::string& path, const std::string& title,
                         const std::string& xlabel, const std::vector<double>& values, int bins,
                         double vline);

void write_heatmap_svg(const std::string& path, const std::string& title, const Matrix& m);

// kinds: "line" (first column is x, the rest are series),
//        "hist" (single value column; two-column class,value CSVs draw a
//                vertical marker at ln(#rows))
void plot_csv(const std::string& csv_path, const std::string& kind,
              const std::string& out_path);

}  // namespace dlab::io
