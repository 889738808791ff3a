#pragma once

#include <vector>

#include "partforest/image.hpp"

namespace partforest {

// Per-cell orientation histograms, block-normalized. Indexed (cy, cx, channel)
// row-major; channels equals the orientation bin count.
struct FeatureMap {
    int cells_x = 0;
    int cells_y = 0;
    int channels = 0;
    int cell_size = 0;
    std::vector<double> data;

    double& at(int cx, int cy, int ch) {
        return data[(static_cast<std::size_t>(cy) * cells_x + cx) * channels + ch];
    }
    double at(int cx, int cy, int ch) const {
        return data[(static_cast<std::size_t>(cy) * cells_x + cx) * channels + ch];
    }
};

// Gradients by central differences with replicated edges, unsigned
// orientations with linear bin interpolation, 2x2-block L2-hys normalization
// (clip 0.2), and per-cell averaging of the block copies.
FeatureMap compute_hog(const ImageGrid& image, int cell_size = 8, int n_orientations = 9);

// Row-major copy of a tpl_w x tpl_h window of cells, length
// tpl_w*tpl_h*channels.
std::vector<double> crop_feature(const FeatureMap& fm, int anchor_cx, int anchor_cy,
                                 int tpl_w, int tpl_h);

}  // namespace partforest
