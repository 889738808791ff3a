#include "partforest/plot.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>

#include "partforest/error.hpp"

namespace partforest {

namespace {

// 5x7 glyphs, one byte per row, low 5 bits used.
struct Glyph {
    char c;
    std::uint8_t rows[7];
};

constexpr Glyph kFont[] = {
    {'0', {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e}},
    {'1', {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e}},
    {'2', {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f}},
    {'3', {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e}},
    {'4', {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02}},
    {'5', {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e}},
    {'6', {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e}},
    {'7', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e}},
    {'9', {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c}},
    {'-', {0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c}},
    {'+', {0x00, 0x04, 0x04, 0x1f, 0x04, 0x04, 0x00}},
    {'E', {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x1f}},
    {'A', {0x0e, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11}},
    {'B', {0x1e, 0x11, 0x11, 0x1e, 0x11, 0x11, 0x1e}},
    {'C', {0x0e, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0e}},
    {'D', {0x1c, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1c}},
    {'F', {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x10}},
    {'G', {0x0e, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0f}},
    {'H', {0x11, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11}},
    {'I', {0x0e, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0c}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1f}},
    {'M', {0x11, 0x1b, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e}},
    {'P', {0x1e, 0x11, 0x11, 0x1e, 0x10, 0x10, 0x10}},
    {'Q', {0x0e, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0d}},
    {'R', {0x1e, 0x11, 0x11, 0x1e, 0x14, 0x12, 0x11}},
    {'S', {0x0f, 0x10, 0x10, 0x0e, 0x01, 0x01, 0x1e}},
    {'T', {0x1f, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0a, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0a}},
    {'X', {0x11, 0x11, 0x0a, 0x04, 0x0a, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x0a, 0x04, 0x04, 0x04, 0x04}},
    {'Z', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1f}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1f}},
    {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
    {'/', {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10}},
    {':', {0x00, 0x0c, 0x0c, 0x00, 0x0c, 0x0c, 0x00}},
};

const Glyph* find_glyph(char c) {
    const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (const Glyph& g : kFont)
        if (g.c == up) return &g;
    return nullptr;
}

std::string format_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

void draw_line(RgbImage& img, double x0, double y0, double x1, double y1, Rgb c) {
    const double dx = x1 - x0, dy = y1 - y0;
    const int steps = std::max(1, static_cast<int>(std::ceil(
                                      std::max(std::abs(dx), std::abs(dy)))));
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        img.set(static_cast<int>(std::lround(x0 + t * dx)),
                static_cast<int>(std::lround(y0 + t * dy)), c.r, c.g, c.b);
    }
}

void fill_circle(RgbImage& img, double cx, double cy, double radius, Rgb c) {
    const int r = static_cast<int>(std::ceil(radius));
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (dx * dx + dy * dy <= radius * radius)
                img.set(static_cast<int>(std::lround(cx)) + dx,
                        static_cast<int>(std::lround(cy)) + dy, c.r, c.g, c.b);
}

void draw_rect(RgbImage& img, int x, int y, int w, int h, Rgb c) {
    for (int i = 0; i < w; ++i) {
        img.set(x + i, y, c.r, c.g, c.b);
        img.set(x + i, y + h - 1, c.r, c.g, c.b);
    }
    for (int i = 0; i < h; ++i) {
        img.set(x, y + i, c.r, c.g, c.b);
        img.set(x + w - 1, y + i, c.r, c.g, c.b);
    }
}

void draw_text(RgbImage& img, int x, int y, const std::string& text, Rgb c) {
    int pen = x;
    for (const char ch : text) {
        if (ch == ' ') {
            pen += 6;
            continue;
        }
        const Glyph* g = find_glyph(ch);
        if (g) {
            for (int row = 0; row < 7; ++row)
                for (int col = 0; col < 5; ++col)
                    if (g->rows[row] & (1 << (4 - col)))
                        img.set(pen + col, y + row, c.r, c.g, c.b);
        }
        pen += 6;
    }
}

void line_chart(const std::vector<Series>& series, const std::string& x_label,
                const std::string& y_label, const std::string& path, int width,
                int height) {
    if (series.empty()) throw ConfigError("line_chart needs at least one series");
    std::size_t n = 0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const Series& s : series) {
        n = std::max(n, s.values.size());
        for (const double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (n == 0) throw ConfigError("line_chart got empty series");
    if (!(hi > lo)) {
        hi += 1.0;
        lo -= 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    RgbImage img(width, height, 255, 255, 255);
    const int ml = 58, mr = 16, mt = 18, mb = 44;
    const int px0 = ml, px1 = width - mr, py0 = height - mb, py1 = mt;
    const Rgb axis{40, 40, 40};
    const Rgb grid{220, 220, 220};

    auto sx = [&](double i) {
        return px0 + (px1 - px0) * (n > 1 ? i / static_cast<double>(n - 1) : 0.5);
    };
    auto sy = [&](double v) { return py0 + (py1 - py0) * ((v - lo) / (hi - lo)); };

    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * t / 4.0;
        const int y = static_cast<int>(std::lround(sy(v)));
        draw_line(img, px0, y, px1, y, grid);
        draw_text(img, 4, y - 3, format_tick(v), axis);
    }
    const int x_ticks = std::min<std::size_t>(n, 6) - 1;
    for (int t = 0; t <= std::max(1, x_ticks); ++t) {
        const double i = (n - 1) * (x_ticks > 0 ? static_cast<double>(t) / x_ticks : 0.0);
        const int x = static_cast<int>(std::lround(sx(i)));
        draw_line(img, x, py0, x, py0 + 4, axis);
        draw_text(img, x - 6, py0 + 8, format_tick(std::round(i)), axis);
    }
    draw_line(img, px0, py0, px1, py0, axis);
    draw_line(img, px0, py0, px0, py1, axis);
    draw_text(img, (px0 + px1) / 2 - 3 * static_cast<int>(x_label.size()), height - 14,
              x_label, axis);
    draw_text(img, 4, 4, y_label, axis);

    int legend_x = px0 + 8;
    for (const Series& s : series) {
        for (std::size_t i = 0; i + 1 < s.values.size(); ++i)
            draw_line(img, sx(static_cast<double>(i)), sy(s.values[i]),
                      sx(static_cast<double>(i + 1)), sy(s.values[i + 1]), s.color);
        draw_line(img, legend_x, py1 + 4, legend_x + 16, py1 + 4, s.color);
        draw_text(img, legend_x + 20, py1, s.label, axis);
        legend_x += 24 + 6 * static_cast<int>(s.label.size()) + 16;
    }
    write_png(img, path);
}

}  // namespace partforest
