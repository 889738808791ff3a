#include "partforest/png_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "partforest/error.hpp"

namespace partforest {

RgbImage::RgbImage(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3) {
    for (std::size_t i = 0; i < data.size(); i += 3) {
        data[i] = r;
        data[i + 1] = g;
        data[i + 2] = b;
    }
}

void RgbImage::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (!in_bounds(x, y)) return;
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    data[i] = r;
    data[i + 1] = g;
    data[i + 2] = b;
}

RgbImage to_rgb(const ImageGrid& gray) {
    RgbImage out(gray.width, gray.height);
    for (int y = 0; y < gray.height; ++y)
        for (int x = 0; x < gray.width; ++x) {
            const auto v = static_cast<std::uint8_t>(
                std::lround(std::clamp(gray.at(x, y), 0.0, 255.0)));
            out.set(x, y, v, v, v);
        }
    return out;
}

namespace {

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& payload) {
    put_u32_be(out, static_cast<std::uint32_t>(payload.size()));
    std::vector<std::uint8_t> body(type, type + 4);
    body.insert(body.end(), payload.begin(), payload.end());
    out.insert(out.end(), body.begin(), body.end());
    const auto crc = crc32(0, body.data(), static_cast<uInt>(body.size()));
    put_u32_be(out, static_cast<std::uint32_t>(crc));
}

void write_png_raw(const std::uint8_t* pixels, int width, int height, int channels,
                   const std::string& path) {
    // Scanlines with filter byte 0; fixed compression level for stable bytes.
    const std::size_t row = static_cast<std::size_t>(width) * channels;
    std::vector<std::uint8_t> raw((row + 1) * height);
    for (int y = 0; y < height; ++y) {
        raw[y * (row + 1)] = 0;
        std::memcpy(&raw[y * (row + 1) + 1], pixels + y * row, row);
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(),
                  static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw NumericalError("zlib compression failed for " + path);
    compressed.resize(bound);

    std::vector<std::uint8_t> png = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    std::vector<std::uint8_t> ihdr;
    put_u32_be(ihdr, static_cast<std::uint32_t>(width));
    put_u32_be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);                                    // bit depth
    ihdr.push_back(channels == 3 ? 2 : 0);                // color type
    ihdr.push_back(0);                                    // compression
    ihdr.push_back(0);                                    // filter
    ihdr.push_back(0);                                    // interlace
    append_chunk(png, "IHDR", ihdr);
    append_chunk(png, "IDAT", compressed);
    append_chunk(png, "IEND", {});

    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(png.data()),
            static_cast<std::streamsize>(png.size()));
    if (!f) throw DataError("short write: " + path);
}

}  // namespace

void write_png(const RgbImage& img, const std::string& path) {
    write_png_raw(img.data.data(), img.width, img.height, 3, path);
}

void write_png_gray(const ImageGrid& img, const std::string& path) {
    std::vector<std::uint8_t> bytes(img.size());
    for (std::size_t i = 0; i < img.size(); ++i)
        bytes[i] = static_cast<std::uint8_t>(
            std::lround(std::clamp(img.data[i], 0.0, 255.0)));
    write_png_raw(bytes.data(), img.width, img.height, 1, path);
}

}  // namespace partforest
