#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "partforest/image.hpp"

namespace partforest {

// Minimal 8-bit RGB raster for plots and detection overlays.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // row-major, 3 bytes per pixel

    RgbImage() = default;
    RgbImage(int w, int h, std::uint8_t r = 255, std::uint8_t g = 255, std::uint8_t b = 255);

    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
};

RgbImage to_rgb(const ImageGrid& gray);

// Byte-deterministic PNG writers (fixed zlib settings, no ancillary chunks).
void write_png(const RgbImage& img, const std::string& path);
void write_png_gray(const ImageGrid& img, const std::string& path);

}  // namespace partforest
