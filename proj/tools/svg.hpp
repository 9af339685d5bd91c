#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gapdiamond::cli {

struct Series {
    std::string label;
    std::vector<double> x, y;
};

// Line plot with axes, ticks and a legend.
void write_svg_plot(std::ostream& os, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<Series>& series);

} // namespace gapdiamond::cli
