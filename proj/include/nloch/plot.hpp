#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nloch/field.hpp"

namespace nloch {

// Field as an RGB PNG (y upward), each cell drawn as a square block. lo >= hi selects the data range.
void write_heatmap_png(const std::filesystem::path& path, const Field& f, double lo = 0.0, double hi = 0.0);

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

// Log-log line plot of positive data with decade grid lines. No text is drawn; nonpositive points
// are skipped.
void write_loglog_png(const std::filesystem::path& path, const std::vector<PlotSeries>& series, int width = 640,
                      int height = 480);

} // namespace nloch
