#include "ndno/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace ndno::io {

namespace {

constexpr int kW = 640, kH = 400;
constexpr int kL = 60, kR = 20, kT = 40, kB = 50;  // margins

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void open_doc(std::string& s, const std::string& title) {
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kW) +
         "\" height=\"" + std::to_string(kH) + "\" viewBox=\"0 0 " + std::to_string(kW) + " " +
         std::to_string(kH) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + std::to_string(kW / 2) +
         "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         title + "</text>\n";
}

void axes(std::string& s, double x0, double x1, double y0, double y1, const std::string& xl,
          const std::string& yl) {
    s += "<line x1=\"" + std::to_string(kL) + "\" y1=\"" + std::to_string(kH - kB) + "\" x2=\"" +
         std::to_string(kW - kR) + "\" y2=\"" + std::to_string(kH - kB) +
         "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + std::to_string(kL) + "\" y1=\"" + std::to_string(kT) + "\" x2=\"" +
         std::to_string(kL) + "\" y2=\"" + std::to_string(kH - kB) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + std::to_string(kL) + "\" y=\"" + std::to_string(kH - kB + 18) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + num(x0) + "</text>\n";
    s += "<text x=\"" + std::to_string(kW - kR) + "\" y=\"" + std::to_string(kH - kB + 18) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + num(x1) +
         "</text>\n";
    s += "<text x=\"" + std::to_string(kL - 6) + "\" y=\"" + std::to_string(kH - kB) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + num(y0) +
         "</text>\n";
    s += "<text x=\"" + std::to_string(kL - 6) + "\" y=\"" + std::to_string(kT + 10) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + num(y1) +
         "</text>\n";
    s += "<text x=\"" + std::to_string((kL + kW - kR) / 2) + "\" y=\"" +
         std::to_string(kH - 12) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + xl +
         "</text>\n";
    if (!yl.empty())
        s += "<text x=\"14\" y=\"" + std::to_string((kT + kH - kB) / 2) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
             "transform=\"rotate(-90 14 " +
             std::to_string((kT + kH - kB) / 2) + ")\">" + yl + "</text>\n";
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

std::string svg_histogram(const std::vector<double>& values, int bins, const std::string& title,
                          const std::string& x_label) {
    if (values.empty()) throw ValidationError("svg_histogram: no values");
    if (bins < 1) throw ValidationError("svg_histogram: bins must be >= 1");
    double lo = *std::min_element(values.begin(), values.end());
    double hi = *std::max_element(values.begin(), values.end());
    if (hi <= lo) hi = lo + 1.0;
    std::vector<int> count(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        int b = static_cast<int>((v - lo) / (hi - lo) * bins);
        b = std::clamp(b, 0, bins - 1);
        ++count[static_cast<std::size_t>(b)];
    }
    const int peak = *std::max_element(count.begin(), count.end());

    std::string s;
    open_doc(s, title);
    axes(s, lo, hi, 0.0, peak, x_label, "count");
    const double plot_w = kW - kL - kR, plot_h = kH - kT - kB;
    for (int b = 0; b < bins; ++b) {
        const double h = plot_h * count[static_cast<std::size_t>(b)] / peak;
        const double x = kL + plot_w * b / bins;
        s += "<rect x=\"" + num(x) + "\" y=\"" + num(kH - kB - h) + "\" width=\"" +
             num(plot_w / bins) + "\" height=\"" + num(h) +
             "\" fill=\"#1f77b4\" stroke=\"white\"/>\n";
    }
    s += "</svg>\n";
    return s;
}

std::string svg_line_chart(const std::vector<std::string>& series, const Mat& values,
                           const std::string& title, bool log_y) {
    if (values.rows() < 1 || values.cols() < 1)
        throw ValidationError("svg_line_chart: empty values");
    if (series.size() != static_cast<std::size_t>(values.cols()))
        throw ValidationError("svg_line_chart: series/column count mismatch");

    auto tf = [log_y](double v) {
        return log_y ? std::log10(std::max(v, 1e-300)) : v;
    };
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Eigen::Index r = 0; r < values.rows(); ++r)
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            lo = std::min(lo, tf(values(r, c)));
            hi = std::max(hi, tf(values(r, c)));
        }
    if (hi <= lo) hi = lo + 1.0;

    std::string s;
    open_doc(s, title);
    axes(s, 0.0, static_cast<double>(values.rows() - 1), log_y ? std::pow(10.0, lo) : lo,
         log_y ? std::pow(10.0, hi) : hi, "epoch", log_y ? "value (log)" : "value");
    const double plot_w = kW - kL - kR, plot_h = kH - kT - kB;
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
        std::string pts;
        for (Eigen::Index r = 0; r < values.rows(); ++r) {
            const double x =
                kL + (values.rows() > 1 ? plot_w * r / (values.rows() - 1) : plot_w / 2);
            const double y = kH - kB - plot_h * (tf(values(r, c)) - lo) / (hi - lo);
            pts += num(x) + "," + num(y) + " ";
        }
        const char* color = kColors[static_cast<std::size_t>(c) % 6];
        s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" points=\"" + pts +
             "\"/>\n";
        s += "<text x=\"" + std::to_string(kW - kR - 8) + "\" y=\"" +
             std::to_string(kT + 16 * (c + 1)) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" +
             color + "\">" + series[static_cast<std::size_t>(c)] + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

}  // namespace ndno::io
