#pragma once

// Tiny line-plot renderer (PNG output) for the threshold-sweep figures.
// Uppercase 5x7 bitmap labels, dashed/solid polylines, fixed y range.

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace maptrace {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::array<uint8_t, 3> color = {0, 0, 0};
    bool dashed = false;
};

void render_line_plot(const std::filesystem::path& path, const std::string& title,
                      const std::vector<PlotSeries>& series, double ymin, double ymax,
                      int width = 880, int height = 560);

}  // namespace maptrace
