#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace partforest {

// Row-major grid of real values. Carries frames (intensities in [0,255]),
// background means and score maps alike.
struct ImageGrid {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    ImageGrid() = default;
    ImageGrid(int w, int h, double fill = 0.0);

    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    std::size_t size() const { return data.size(); }
};

// Binary foreground mask; bits are 0/1 and dimensions match the source frame.
struct BlobMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BlobMask() = default;
    BlobMask(int w, int h, std::uint8_t fill = 0);

    std::uint8_t& at(int x, int y) { return bits[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    std::size_t count() const;
};

struct BoundingBox {
    int x = 0;  // top-left pixel
    int y = 0;
    int w = 1;
    int h = 1;
};

// Fraction of the box covered by foreground. Out-of-bounds portions count as
// background; the denominator is always w*h.
double overlap_ratio(const BlobMask& mask, const BoundingBox& box);

// Summed-area table over the mask for O(1) box queries in inner loops.
class MaskIntegral {
public:
    explicit MaskIntegral(const BlobMask& mask);
    // Foreground count inside box clipped to the image.
    std::int64_t count_in(const BoundingBox& box) const;
    double overlap_ratio(const BoundingBox& box) const;

private:
    int width_;
    int height_;
    std::vector<std::int64_t> sat_;  // (width+1) x (height+1)
};

// Binary dilation with a Euclidean disc of the given radius.
BlobMask dilate(const BlobMask& mask, double radius);

// 8-bit binary PGM (P5). Frames round-clamp to [0,255]; masks map 1 -> 255.
void write_pgm(const ImageGrid& img, const std::string& path);
void write_pgm(const BlobMask& mask, const std::string& path);
ImageGrid read_pgm(const std::string& path);
BlobMask read_pgm_mask(const std::string& path);

}  // namespace partforest
