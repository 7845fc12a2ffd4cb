#include "hotelling/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hotelling::svg {

namespace {

constexpr double kWidth = 720, kHeight = 500;
constexpr double kLeft = 80, kRight = 30, kTop = 48, kBottom = 60;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Axis {
    double lo = 0, hi = 1;
    bool log = false;

    double to_unit(double v) const {
        if (log) return (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
        return (v - lo) / (hi - lo);
    }

    std::vector<double> ticks() const {
        std::vector<double> out;
        if (log) {
            const int e0 = static_cast<int>(std::floor(std::log10(lo)));
            const int e1 = static_cast<int>(std::ceil(std::log10(hi)));
            for (int e = e0; e <= e1; ++e) {
                const double t = std::pow(10.0, e);
                if (t >= lo * 0.999 && t <= hi * 1.001) out.push_back(t);
            }
            if (out.size() < 2) {
                out = {lo, hi};
            }
            return out;
        }
        const double span = hi - lo;
        const double raw = span / 6.0;
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        double step = mag;
        for (double mult : {1.0, 2.0, 5.0, 10.0}) {
            if (raw <= mult * mag) {
                step = mult * mag;
                break;
            }
        }
        const double first = std::ceil(lo / step) * step;
        for (double t = first; t <= hi + 1e-12 * span; t += step) out.push_back(t);
        return out;
    }
};

void expand(double v, double& lo, double& hi, bool log_axis) {
    if (!std::isfinite(v)) return;
    if (log_axis && v <= 0.0) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
}

}  // namespace

std::string Figure::render() const {
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
    double ylo = xlo, yhi = -xlo;
    for (const Series& s : series) {
        for (size_t i = 0; i < s.x.size(); ++i) {
            expand(s.x[i], xlo, xhi, log_x);
            expand(s.y[i], ylo, yhi, log_y);
            if (i < s.yerr.size()) {
                expand(s.y[i] + s.yerr[i], ylo, yhi, log_y);
                expand(s.y[i] - s.yerr[i], ylo, yhi, log_y);
            }
        }
    }
    if (!(xlo < xhi)) {
        xlo -= 0.5;
        xhi += 0.5;
    }
    if (!(ylo < yhi)) {
        ylo = ylo - 0.5;
        yhi = yhi + 0.5;
    }

    auto pad = [](double& lo, double& hi, bool logscale) {
        if (logscale) {
            lo /= 1.5;
            hi *= 1.5;
        } else {
            const double margin = 0.06 * (hi - lo);
            lo -= margin;
            hi += margin;
        }
    };
    Axis ax{xlo, xhi, log_x}, ay{ylo, yhi, log_y};
    pad(ax.lo, ax.hi, log_x);
    pad(ay.lo, ay.hi, log_y);

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + ax.to_unit(v) * plot_w; };
    auto py = [&](double v) { return kTop + (1.0 - ay.to_unit(v)) * plot_h; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";

    // frame and ticks
    out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
        << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (double t : ax.ticks()) {
        const double gx = px(t);
        out << "<line x1=\"" << gx << "\" y1=\"" << kTop << "\" x2=\"" << gx << "\" y2=\""
            << kTop + plot_h << "\" stroke=\"#ddd\"/>\n";
        out << "<text x=\"" << gx << "\" y=\"" << kTop + plot_h + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(t)
            << "</text>\n";
    }
    for (double t : ay.ticks()) {
        const double gy = py(t);
        out << "<line x1=\"" << kLeft << "\" y1=\"" << gy << "\" x2=\"" << kLeft + plot_w
            << "\" y2=\"" << gy << "\" stroke=\"#ddd\"/>\n";
        out << "<text x=\"" << kLeft - 6 << "\" y=\"" << gy + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(t)
            << "</text>\n";
    }
    out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label
        << "</text>\n";
    out << "<text x=\"18\" y=\"" << kTop + plot_h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 18 " << kTop + plot_h / 2 << ")\">" << y_label << "</text>\n";

    int color_idx = 0;
    double legend_y = kTop + 14;
    for (const Series& s : series) {
        const std::string color =
            s.color.empty() ? kPalette[color_idx % 10] : s.color;
        ++color_idx;

        if (s.draw_line && s.x.size() > 1) {
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (size_t i = 0; i < s.x.size(); ++i) {
                if (log_x && s.x[i] <= 0) continue;
                if (log_y && s.y[i] <= 0) continue;
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                out << px(s.x[i]) << "," << py(s.y[i]) << " ";
            }
            out << "\"/>\n";
        }
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (log_x && s.x[i] <= 0) continue;
            if (log_y && s.y[i] <= 0) continue;
            const double cx = px(s.x[i]);
            if (i < s.yerr.size() && s.yerr[i] > 0) {
                double y_low = s.y[i] - s.yerr[i];
                if (log_y) y_low = std::max(y_low, ay.lo);
                out << "<line x1=\"" << cx << "\" y1=\"" << py(y_low) << "\" x2=\"" << cx
                    << "\" y2=\"" << py(s.y[i] + s.yerr[i]) << "\" stroke=\"" << color
                    << "\"/>\n";
            }
            if (s.draw_points)
                out << "<circle cx=\"" << cx << "\" cy=\"" << py(s.y[i])
                    << "\" r=\"3.2\" fill=\"" << color << "\"/>\n";
        }
        if (!s.label.empty()) {
            out << "<rect x=\"" << kLeft + plot_w - 170 << "\" y=\"" << legend_y - 9
                << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
            out << "<text x=\"" << kLeft + plot_w - 155 << "\" y=\"" << legend_y
                << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
            legend_y += 16;
        }
    }
    out << "</svg>\n";
    return out.str();
}

std::string render_assignment_map(const Eigen::ArrayXXi& owner,
                                  const std::vector<std::pair<double, double>>& firm_positions,
                                  const std::string& title) {
    const int n = static_cast<int>(owner.rows());
    if (n == 0 || owner.cols() != n) throw std::invalid_argument("owner grid must be square");
    const double size = 560, margin = 40;
    const double cell = size / n;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * margin
        << "\" height=\"" << size + 2 * margin + 20 << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << margin + size / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
    // y flipped so the unit square reads bottom-up
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const char* color = kPalette[owner(i, j) % 10];
            out << "<rect x=\"" << margin + i * cell << "\" y=\""
                << margin + 20 + (n - 1 - j) * cell << "\" width=\"" << cell + 0.5
                << "\" height=\"" << cell + 0.5 << "\" fill=\"" << color
                << "\" fill-opacity=\"0.45\"/>\n";
        }
    }
    for (size_t k = 0; k < firm_positions.size(); ++k) {
        const double cx = margin + firm_positions[k].first * size;
        const double cy = margin + 20 + (1.0 - firm_positions[k].second) * size;
        out << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"6\" fill=\""
            << kPalette[k % 10] << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    }
    out << "<rect x=\"" << margin << "\" y=\"" << margin + 20 << "\" width=\"" << size
        << "\" height=\"" << size << "\" fill=\"none\" stroke=\"#333\"/>\n";
    out << "</svg>\n";
    return out.str();
}

}  // namespace hotelling::svg
