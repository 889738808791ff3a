#pragma once

#include <string>
#include <vector>

#include "partforest/png_io.hpp"

namespace partforest {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
};

void draw_line(RgbImage& img, double x0, double y0, double x1, double y1, Rgb color);
void fill_circle(RgbImage& img, double cx, double cy, double radius, Rgb color);
void draw_rect(RgbImage& img, int x, int y, int w, int h, Rgb color);
// 5x7 bitmap glyphs (digits, '-', '.', letters); lowercase renders as capitals.
void draw_text(RgbImage& img, int x, int y, const std::string& text, Rgb color);

struct Series {
    std::string label;
    Rgb color;
    std::vector<double> values;
};

// Line chart over frame index with tick labels and axis titles.
void line_chart(const std::vector<Series>& series, const std::string& x_label,
                const std::string& y_label, const std::string& path,
                int width = 560, int height = 360);

}  // namespace partforest
