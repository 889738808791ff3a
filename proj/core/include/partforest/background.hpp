#pragma once

#include "partforest/image.hpp"

namespace partforest {

// Running-average background model. The mean is updated by replacement, so a
// model value can be shared freely between threads once built.
struct BackgroundModel {
    ImageGrid mean;
    double learning_rate = 0.05;  // in (0, 1]
    double threshold = 25.0;      // intensity units, >= 0

    BackgroundModel() = default;
    BackgroundModel(ImageGrid initial_mean, double alpha, double thresh);
};

// mean' = alpha*frame + (1-alpha)*mean, per pixel.
BackgroundModel update_background(const BackgroundModel& bg, const ImageGrid& frame);

// bit = 1 iff |frame - mean| > threshold (strict; equality is background).
BlobMask subtract_background(const BackgroundModel& bg, const ImageGrid& frame);

// Zero out 4-connected components smaller than min_area pixels.
BlobMask clean_mask(const BlobMask& mask, int min_area);

}  // namespace partforest
