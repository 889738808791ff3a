#include "partforest/background.hpp"

#include <cmath>
#include <vector>

#include "partforest/error.hpp"

namespace partforest {

BackgroundModel::BackgroundModel(ImageGrid initial_mean, double alpha, double thresh)
    : mean(std::move(initial_mean)), learning_rate(alpha), threshold(thresh) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ConfigError("background learning rate must be in (0, 1]");
    if (thresh < 0.0) throw ConfigError("background threshold must be >= 0");
}

namespace {
void require_same_shape(const ImageGrid& a, const ImageGrid& b) {
    if (a.width != b.width || a.height != b.height)
        throw ShapeError("frame dimensions do not match background model");
}
}  // namespace

BackgroundModel update_background(const BackgroundModel& bg, const ImageGrid& frame) {
    require_same_shape(bg.mean, frame);
    BackgroundModel out = bg;
    const double a = bg.learning_rate;
    for (std::size_t i = 0; i < frame.size(); ++i)
        out.mean.data[i] = a * frame.data[i] + (1.0 - a) * bg.mean.data[i];
    return out;
}

BlobMask subtract_background(const BackgroundModel& bg, const ImageGrid& frame) {
    require_same_shape(bg.mean, frame);
    BlobMask mask(frame.width, frame.height);
    for (std::size_t i = 0; i < frame.size(); ++i)
        mask.bits[i] = std::abs(frame.data[i] - bg.mean.data[i]) > bg.threshold ? 1 : 0;
    return mask;
}

BlobMask clean_mask(const BlobMask& mask, int min_area) {
    BlobMask out = mask;
    std::vector<std::int32_t> label(mask.bits.size(), 0);
    std::vector<std::size_t> stack;
    std::vector<std::size_t> component;
    std::int32_t next_label = 0;

    for (std::size_t start = 0; start < mask.bits.size(); ++start) {
        if (!mask.bits[start] || label[start]) continue;
        ++next_label;
        component.clear();
        stack.assign(1, start);
        label[start] = next_label;
        while (!stack.empty()) {
            const std::size_t idx = stack.back();
            stack.pop_back();
            component.push_back(idx);
            const int x = static_cast<int>(idx % mask.width);
            const int y = static_cast<int>(idx / mask.width);
            const int nx[4] = {x - 1, x + 1, x, x};
            const int ny[4] = {y, y, y - 1, y + 1};
            for (int k = 0; k < 4; ++k) {
                if (!mask.in_bounds(nx[k], ny[k])) continue;
                const std::size_t nidx =
                    static_cast<std::size_t>(ny[k]) * mask.width + nx[k];
                if (mask.bits[nidx] && !label[nidx]) {
                    label[nidx] = next_label;
                    stack.push_back(nidx);
                }
            }
        }
        if (component.size() < static_cast<std::size_t>(min_area))
            for (const std::size_t idx : component) out.bits[idx] = 0;
    }
    return out;
}

}  // namespace partforest
