#pragma once

#include <string>
#include <vector>

#include "ndno/pointcloud.hpp"

namespace ndno::io {

// Self-contained SVG documents; no plotting dependency.
std::string svg_histogram(const std::vector<double>& values, int bins, const std::string& title,
                          const std::string& x_label);

// One polyline per column of `values`; x axis is the row index (epoch).
std::string svg_line_chart(const std::vector<std::string>& series, const Mat& values,
                           const std::string& title, bool log_y = false);

}  // namespace ndno::io
