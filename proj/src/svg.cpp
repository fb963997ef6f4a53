#include "ssanova/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "ssanova/errors.hpp"

namespace ssanova {

namespace {

constexpr double kWidth = 960.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 64.0, kRight = 24.0, kTop = 40.0, kBottom = 48.0;

const char* kPalette[] = {"#1b6ca8", "#d1495b", "#3a8f5f",
                          "#e8a33d", "#7d5ba6", "#4f6367"};
constexpr int kPaletteSize = 6;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string escape_text(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// A round y-tick step covering the range with 4-8 ticks.
double tick_step(double span) {
    double raw = span / 5.0;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double mult : {1.0, 2.0, 2.5, 5.0, 10.0})
        if (mult * mag >= raw) return mult * mag;
    return 10.0 * mag;
}

}  // namespace

std::string render_svg(const std::vector<SvgSeries>& series,
                       const SvgOptions& options) {
    double ymin = std::numeric_limits<double>::infinity();
    double ymax = -std::numeric_limits<double>::infinity();
    for (const auto& s : series) {
        if (s.x.size() != s.y.size())
            throw ArgumentError("series '" + s.label + "': x/y size mismatch");
        if (!s.lo.empty() &&
            (s.lo.size() != s.x.size() || s.hi.size() != s.x.size()))
            throw ArgumentError("series '" + s.label + "': band size mismatch");
        for (double v : s.y) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
        for (double v : s.lo) ymin = std::min(ymin, v);
        for (double v : s.hi) ymax = std::max(ymax, v);
    }
    if (!std::isfinite(ymin)) { ymin = 0.0; ymax = 1.0; }
    if (options.zero_line) {
        ymin = std::min(ymin, 0.0);
        ymax = std::max(ymax, 0.0);
    }
    if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }
    double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto sx = [&](double minute) {
        return kLeft + plot_w * (minute / 1440.0);
    };
    auto sy = [&](double v) {
        return kTop + plot_h * (1.0 - (v - ymin) / (ymax - ymin));
    };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 960 480\" "
           "font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"960\" height=\"480\" fill=\"white\"/>\n";
    if (!options.title.empty())
        out << "<text x=\"" << kLeft << "\" y=\"22\" font-size=\"15\" "
               "font-weight=\"bold\">"
            << escape_text(options.title) << "</text>\n";

    // x grid + labels: every 3 hours.
    for (int h = 0; h <= 24; h += 3) {
        double x = sx(h * 60.0);
        out << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(kTop) << "\" x2=\""
            << fmt(x) << "\" y2=\"" << fmt(kTop + plot_h)
            << "\" stroke=\"#e0e0e0\"/>\n";
        out << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(kTop + plot_h + 18)
            << "\" text-anchor=\"middle\">" << h << ":00</text>\n";
    }
    // y grid + labels.
    double step = tick_step(ymax - ymin);
    double first = std::ceil(ymin / step) * step;
    for (double v = first; v <= ymax + 1e-9 * step; v += step) {
        double y = sy(v);
        out << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(y)
            << "\" x2=\"" << fmt(kLeft + plot_w) << "\" y2=\"" << fmt(y)
            << "\" stroke=\"#e0e0e0\"/>\n";
        char lbl[32];
        std::snprintf(lbl, sizeof(lbl), "%g", v + 0.0);
        out << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(y + 4)
            << "\" text-anchor=\"end\">" << lbl << "</text>\n";
    }
    if (!options.y_label.empty())
        out << "<text x=\"16\" y=\"" << fmt(kTop + plot_h / 2)
            << "\" transform=\"rotate(-90 16 " << fmt(kTop + plot_h / 2)
            << ")\" text-anchor=\"middle\">" << escape_text(options.y_label)
            << "</text>\n";
    if (options.zero_line) {
        double y = sy(0.0);
        out << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(y)
            << "\" x2=\"" << fmt(kLeft + plot_w) << "\" y2=\"" << fmt(y)
            << "\" stroke=\"#888888\" stroke-dasharray=\"4 3\"/>\n";
    }

    // Bands first so curves draw on top.
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        if (s.lo.empty() || s.x.empty()) continue;
        const char* color = kPalette[si % kPaletteSize];
        out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" "
               "stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << fmt(sx(s.x[i])) << "," << fmt(sy(s.hi[i])) << " ";
        for (std::size_t i = s.x.size(); i-- > 0;)
            out << fmt(sx(s.x[i])) << "," << fmt(sy(s.lo[i])) << " ";
        out << "\"/>\n";
    }
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        if (s.x.empty()) continue;
        const char* color = kPalette[si % kPaletteSize];
        out << "<path fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.8\" d=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << (i == 0 ? "M" : "L") << fmt(sx(s.x[i])) << " "
                << fmt(sy(s.y[i]));
        out << "\"/>\n";
    }

    // Legend in the top-right corner of the plot area.
    double lx = kLeft + plot_w - 150.0, ly = kTop + 10.0;
    for (std::size_t si = 0; si < series.size(); ++si) {
        const char* color = kPalette[si % kPaletteSize];
        out << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly + 4)
            << "\" x2=\"" << fmt(lx + 22) << "\" y2=\"" << fmt(ly + 4)
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << fmt(lx + 28) << "\" y=\"" << fmt(ly + 8)
            << "\">" << escape_text(series[si].label) << "</text>\n";
        ly += 18.0;
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace ssanova
