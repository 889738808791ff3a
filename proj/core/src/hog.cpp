#include "partforest/hog.hpp"

#include <algorithm>
#include <cmath>

#include "partforest/error.hpp"

namespace partforest {

namespace {
constexpr double kClip = 0.2;
constexpr double kNormEps = 1e-6;
}  // namespace

FeatureMap compute_hog(const ImageGrid& image, int cell_size, int n_orientations) {
    if (cell_size < 1 || n_orientations < 1)
        throw ConfigError("cell_size and n_orientations must be positive");
    if (image.width < 3 * cell_size || image.height < 3 * cell_size)
        throw ShapeError("image too small for HOG: need at least 3 cells each way");

    FeatureMap fm;
    fm.cell_size = cell_size;
    fm.channels = n_orientations;
    fm.cells_x = image.width / cell_size;
    fm.cells_y = image.height / cell_size;
    const int cx_n = fm.cells_x, cy_n = fm.cells_y;

    // Raw per-cell histograms.
    std::vector<double> hist(static_cast<std::size_t>(cx_n) * cy_n * n_orientations, 0.0);
    const double bin_width = M_PI / n_orientations;
    auto clamp_x = [&](int x) { return std::clamp(x, 0, image.width - 1); };
    auto clamp_y = [&](int y) { return std::clamp(y, 0, image.height - 1); };

    for (int y = 0; y < cy_n * cell_size; ++y) {
        const int cy = y / cell_size;
        for (int x = 0; x < cx_n * cell_size; ++x) {
            const int cx = x / cell_size;
            const double gx = 0.5 * (image.at(clamp_x(x + 1), y) - image.at(clamp_x(x - 1), y));
            const double gy = 0.5 * (image.at(x, clamp_y(y + 1)) - image.at(x, clamp_y(y - 1)));
            const double mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0.0) continue;
            double theta = std::atan2(gy, gx);  // (-pi, pi]
            if (theta < 0.0) theta += M_PI;     // unsigned orientation in [0, pi)
            if (theta >= M_PI) theta -= M_PI;
            // Linear split between the two nearest bin centers (centers at
            // k * bin_width, wrapping at pi).
            const double pos = theta / bin_width;
            int b0 = static_cast<int>(std::floor(pos));
            const double w1 = pos - b0;
            if (b0 >= n_orientations) b0 -= n_orientations;
            const int b1 = b0 + 1 >= n_orientations ? 0 : b0 + 1;
            double* cell = &hist[(static_cast<std::size_t>(cy) * cx_n + cx) * n_orientations];
            cell[b0] += mag * (1.0 - w1);
            cell[b1] += mag * w1;
        }
    }

    // 2x2 block L2-hys, then average each cell's block copies. The 3-cell
    // minimum guarantees every block is a full 2x2.
    fm.data.assign(hist.size(), 0.0);
    std::vector<int> copies(static_cast<std::size_t>(cx_n) * cy_n, 0);
    std::vector<double> block(4 * n_orientations);
    for (int by = 0; by + 1 < cy_n; ++by) {
        for (int bx = 0; bx + 1 < cx_n; ++bx) {
            double sq = 0.0;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx)
                    for (int ch = 0; ch < n_orientations; ++ch) {
                        const double v =
                            hist[(static_cast<std::size_t>(by + dy) * cx_n + bx + dx) *
                                     n_orientations + ch];
                        block[(dy * 2 + dx) * n_orientations + ch] = v;
                        sq += v * v;
                    }
            const double inv = 1.0 / std::sqrt(sq + kNormEps * kNormEps);
            double sq2 = 0.0;
            for (int i = 0; i < 4 * n_orientations; ++i) {
                const double v = std::min(block[i] * inv, kClip);
                block[i] = v;
                sq2 += v * v;
            }
            const double inv2 = 1.0 / std::sqrt(sq2 + kNormEps * kNormEps);
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    ++copies[static_cast<std::size_t>(by + dy) * cx_n + bx + dx];
                    for (int ch = 0; ch < n_orientations; ++ch)
                        fm.at(bx + dx, by + dy, ch) +=
                            std::min(block[(dy * 2 + dx) * n_orientations + ch] * inv2, kClip);
                }
        }
    }
    for (int cy = 0; cy < cy_n; ++cy)
        for (int cx = 0; cx < cx_n; ++cx) {
            const int n = std::max(1, copies[static_cast<std::size_t>(cy) * cx_n + cx]);
            for (int ch = 0; ch < n_orientations; ++ch) fm.at(cx, cy, ch) /= n;
        }
    return fm;
}

std::vector<double> crop_feature(const FeatureMap& fm, int anchor_cx, int anchor_cy,
                                 int tpl_w, int tpl_h) {
    if (tpl_w < 1 || tpl_h < 1) throw ShapeError("template dims must be positive");
    if (anchor_cx < 0 || anchor_cy < 0 || anchor_cx + tpl_w > fm.cells_x ||
        anchor_cy + tpl_h > fm.cells_y)
        throw ShapeError("feature crop window out of bounds");
    std::vector<double> out(static_cast<std::size_t>(tpl_w) * tpl_h * fm.channels);
    std::size_t k = 0;
    for (int dy = 0; dy < tpl_h; ++dy)
        for (int dx = 0; dx < tpl_w; ++dx)
            for (int ch = 0; ch < fm.channels; ++ch)
                out[k++] = fm.at(anchor_cx + dx, anchor_cy + dy, ch);
    return out;
}

}  // namespace partforest
