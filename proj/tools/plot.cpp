#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "pgcn/data.hpp"
#include "pgcn/errors.hpp"

namespace pgcn::cli {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

void render_svg(const std::string& svg_path, const std::string& title, const std::vector<Series>& series,
                int panels, const std::vector<std::string>& panel_labels) {
    if (series.empty()) throw DataError("plot: nothing to draw");
    const int width = 820, panel_height = 300, margin = 60;
    const int height = panels * panel_height + 40;

    std::ofstream svg(svg_path);
    if (!svg) throw DataError("cannot write " + svg_path);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
        << "font-family=\"sans-serif\">" << title << "</text>\n";

    for (int panel = 0; panel < panels; ++panel) {
        double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
        double ymin = xmin, ymax = -xmin;
        for (const Series& s : series) {
            if (s.panel != panel) continue;
            for (double v : s.x) {
                xmin = std::min(xmin, v);
                xmax = std::max(xmax, v);
            }
            for (double v : s.y) {
                ymin = std::min(ymin, v);
                ymax = std::max(ymax, v);
            }
        }
        if (!std::isfinite(xmin)) continue;
        if (xmax <= xmin) xmax = xmin + 1;
        if (ymax <= ymin) ymax = ymin + 1;
        const double pad = 0.05 * (ymax - ymin);
        ymin -= pad;
        ymax += pad;

        const int top = 40 + panel * panel_height;
        const int plot_w = width - 2 * margin;
        const int plot_h = panel_height - 70;
        auto sx = [&](double v) { return margin + (v - xmin) / (xmax - xmin) * plot_w; };
        auto sy = [&](double v) { return top + plot_h - (v - ymin) / (ymax - ymin) * plot_h; };

        svg << "<rect x=\"" << margin << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\"" << plot_h
            << "\" fill=\"none\" stroke=\"#888\"/>\n";
        // min/max tick labels
        svg << "<text x=\"" << margin - 6 << "\" y=\"" << top + plot_h << "\" text-anchor=\"end\" font-size=\"11\" "
            << "font-family=\"sans-serif\">" << fmt(ymin + pad) << "</text>\n";
        svg << "<text x=\"" << margin - 6 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\" font-size=\"11\" "
            << "font-family=\"sans-serif\">" << fmt(ymax - pad) << "</text>\n";
        svg << "<text x=\"" << margin << "\" y=\"" << top + plot_h + 16 << "\" font-size=\"11\" "
            << "font-family=\"sans-serif\">" << fmt(xmin) << "</text>\n";
        svg << "<text x=\"" << margin + plot_w << "\" y=\"" << top + plot_h + 16
            << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(xmax) << "</text>\n";
        if (panel < static_cast<int>(panel_labels.size())) {
            svg << "<text x=\"" << margin << "\" y=\"" << top - 8 << "\" font-size=\"12\" "
                << "font-family=\"sans-serif\">" << panel_labels[static_cast<std::size_t>(panel)] << "</text>\n";
        }

        int legend_idx = 0;
        for (const Series& s : series) {
            if (s.panel != panel) continue;
            svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                svg << fmt(sx(s.x[i])) << "," << fmt(sy(s.y[i])) << " ";
            }
            svg << "\"/>\n";
            const int lx = margin + plot_w - 150;
            const int ly = top + 16 + 16 * legend_idx;
            svg << "<line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\"" << lx + 22 << "\" y2=\"" << ly - 4
                << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
            svg << "<text x=\"" << lx + 28 << "\" y=\"" << ly << "\" font-size=\"11\" "
                << "font-family=\"sans-serif\">" << s.label << "</text>\n";
            ++legend_idx;
        }
    }
    svg << "</svg>\n";

    std::ofstream tidy(svg_path + ".data.csv");
    if (!tidy) throw DataError("cannot write " + svg_path + ".data.csv");
    tidy << "series,x,y\n";
    for (const Series& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i)
            tidy << s.label << "," << format_value(s.x[i]) << "," << format_value(s.y[i]) << "\n";
}

}  // namespace pgcn::cli
