#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

namespace gapdiamond::cli {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += c;
        }
    }
    return out;
}

// Round step of 1, 2 or 5 times a power of ten giving about n ticks.
double nice_step(double span, int n) {
    const double raw = span / n;
    const double p = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0})
        if (raw <= m * p) return m * p;
    return 10.0 * p;
}

} // namespace

void write_svg_plot(std::ostream& os, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<Series>& series) {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            xmin = std::min(xmin, s.x[k]);
            xmax = std::max(xmax, s.x[k]);
            ymin = std::min(ymin, s.y[k]);
            ymax = std::max(ymax, s.y[k]);
        }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * ph; };

    fmt::memory_buffer b;
    auto out = std::back_inserter(b);
    fmt::format_to(out,
                   "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
                   "font-family=\"sans-serif\" font-size=\"12\">\n",
                   kWidth, kHeight);
    fmt::format_to(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    fmt::format_to(out, "<text x=\"{:.1f}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                   kLeft + pw / 2, escape(title));
    fmt::format_to(out, "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kLeft,
                   kTop, pw, ph);

    const double xs = nice_step(xmax - xmin, 5), ys = nice_step(ymax - ymin, 5);
    for (double t = std::ceil(xmin / xs) * xs; t <= xmax + 1e-9 * xs; t += xs) {
        fmt::format_to(out, "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"black\"/>\n",
                       px(t), kTop + ph, kTop + ph + 5);
        fmt::format_to(out, "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:g}</text>\n", px(t),
                       kTop + ph + 18, t);
    }
    for (double t = std::ceil(ymin / ys) * ys; t <= ymax + 1e-9 * ys; t += ys) {
        fmt::format_to(out, "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"black\"/>\n",
                       kLeft - 5, py(t), kLeft);
        fmt::format_to(out, "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:g}</text>\n", kLeft - 8,
                       py(t) + 4, t);
    }
    fmt::format_to(out, "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", kLeft + pw / 2,
                   kHeight - 10, escape(x_label));
    fmt::format_to(out,
                   "<text x=\"16\" y=\"{0:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0:.1f})\">{1}</text>\n",
                   kTop + ph / 2, escape(y_label));

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kColors[k % std::size(kColors)];
        fmt::format_to(out, "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"", color);
        for (std::size_t i = 0; i < s.x.size(); ++i)
            fmt::format_to(out, "{}{:.2f},{:.2f}", i ? " " : "", px(s.x[i]), py(s.y[i]));
        fmt::format_to(out, "\"/>\n");
        const double ly = kTop + 10 + 18 * static_cast<double>(k);
        fmt::format_to(out, "<line x1=\"{0}\" y1=\"{1:.1f}\" x2=\"{2}\" y2=\"{1:.1f}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
                       kWidth - kRight + 15, ly, kWidth - kRight + 40, color);
        fmt::format_to(out, "<text x=\"{}\" y=\"{:.1f}\">{}</text>\n", kWidth - kRight + 46, ly + 4, escape(s.label));
    }
    fmt::format_to(out, "</svg>\n");
    os.write(b.data(), static_cast<std::streamsize>(b.size()));
}

} // namespace gapdiamond::cli
