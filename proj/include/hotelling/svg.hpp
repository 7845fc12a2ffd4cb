#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace hotelling::svg {

struct Series {
    std::string label;
    std::string color = "#1f77b4";
    bool draw_line = false;
    bool draw_points = true;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> yerr;  // empty or same length as y
};

/// Minimal static chart: scatter/line series on linear or log axes.
struct Figure {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<Series> series;

    std::string render() const;
};

/// Color-cell rendering of a customer-to-firm assignment with firm markers.
std::string render_assignment_map(const Eigen::ArrayXXi& owner,
                                  const std::vector<std::pair<double, double>>& firm_positions,
                                  const std::string& title);

}  // namespace hotelling::svg
