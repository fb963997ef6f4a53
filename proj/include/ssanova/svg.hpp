#pragma once

#include <string>
#include <vector>

namespace ssanova {

// One curve over minute-of-day, with an optional confidence band.
struct SvgSeries {
    std::string label;
    std::vector<double> x;   // minutes in [0, 1440]
    std::vector<double> y;
    std::vector<double> lo;  // empty, or same length as x
    std::vector<double> hi;
};

struct SvgOptions {
    std::string title;
    std::string y_label;
    bool zero_line = false;  // draw a reference line at y = 0
};

// Render a static SVG chart (viewBox 960x480) with an hour axis on x.
std::string render_svg(const std::vector<SvgSeries>& series,
                       const SvgOptions& options = {});

}  // namespace ssanova
