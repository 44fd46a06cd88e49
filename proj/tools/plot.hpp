#pragma once

#include <string>
#include <vector>

namespace pgcn::cli {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    int panel = 0;
};

// Renders stacked line-chart panels into a standalone SVG and writes the
// plotted points as a tidy CSV (`series,x,y`) beside it.
void render_svg(const std::string& svg_path, const std::string& title, const std::vector<Series>& series,
                int panels, const std::vector<std::string>& panel_labels);

}  // namespace pgcn::cli
