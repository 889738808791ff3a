#include "partforest/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "partforest/error.hpp"

namespace partforest {

ImageGrid::ImageGrid(int w, int h, double fill) : width(w), height(h) {
    if (w < 1 || h < 1) throw ShapeError("ImageGrid dimensions must be >= 1");
    data.assign(static_cast<std::size_t>(w) * h, fill);
}

BlobMask::BlobMask(int w, int h, std::uint8_t fill) : width(w), height(h) {
    if (w < 1 || h < 1) throw ShapeError("BlobMask dimensions must be >= 1");
    bits.assign(static_cast<std::size_t>(w) * h, fill);
}

std::size_t BlobMask::count() const {
    return static_cast<std::size_t>(std::accumulate(bits.begin(), bits.end(), std::size_t{0}));
}

double overlap_ratio(const BlobMask& mask, const BoundingBox& box) {
    const int x0 = std::max(box.x, 0);
    const int y0 = std::max(box.y, 0);
    const int x1 = std::min(box.x + box.w, mask.width);
    const int y1 = std::min(box.y + box.h, mask.height);
    if (x0 >= x1 || y0 >= y1) return 0.0;
    std::int64_t fg = 0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) fg += mask.at(x, y);
    return static_cast<double>(fg) / (static_cast<double>(box.w) * box.h);
}

MaskIntegral::MaskIntegral(const BlobMask& mask)
    : width_(mask.width), height_(mask.height),
      sat_(static_cast<std::size_t>(mask.width + 1) * (mask.height + 1), 0) {
    const int stride = width_ + 1;
    for (int y = 0; y < height_; ++y) {
        std::int64_t row = 0;
        for (int x = 0; x < width_; ++x) {
            row += mask.at(x, y);
            sat_[static_cast<std::size_t>(y + 1) * stride + (x + 1)] =
                sat_[static_cast<std::size_t>(y) * stride + (x + 1)] + row;
        }
    }
}

std::int64_t MaskIntegral::count_in(const BoundingBox& box) const {
    const int x0 = std::clamp(box.x, 0, width_);
    const int y0 = std::clamp(box.y, 0, height_);
    const int x1 = std::clamp(box.x + box.w, 0, width_);
    const int y1 = std::clamp(box.y + box.h, 0, height_);
    if (x0 >= x1 || y0 >= y1) return 0;
    const int stride = width_ + 1;
    auto s = [&](int x, int y) { return sat_[static_cast<std::size_t>(y) * stride + x]; };
    return s(x1, y1) - s(x0, y1) - s(x1, y0) + s(x0, y0);
}

double MaskIntegral::overlap_ratio(const BoundingBox& box) const {
    return static_cast<double>(count_in(box)) / (static_cast<double>(box.w) * box.h);
}

BlobMask dilate(const BlobMask& mask, double radius) {
    BlobMask out(mask.width, mask.height, 0);
    const int r = static_cast<int>(std::floor(radius));
    const double r2 = radius * radius;
    // Offsets inside the disc, precomputed once.
    std::vector<std::pair<int, int>> disc;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (dx * dx + dy * dy <= r2) disc.emplace_back(dx, dy);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y)) continue;
            for (const auto& [dx, dy] : disc) {
                const int nx = x + dx, ny = y + dy;
                if (out.in_bounds(nx, ny)) out.at(nx, ny) = 1;
            }
        }
    }
    return out;
}

namespace {

void write_pgm_bytes(const std::vector<std::uint8_t>& bytes, int w, int h,
                     const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << "P5\n" << w << " " << h << "\n255\n";
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw DataError("short write: " + path);
}

struct PgmHeader {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bytes;
};

PgmHeader read_pgm_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path);
    std::string magic;
    f >> magic;
    if (magic != "P5") throw FormatError("not a P5 PGM: " + path, 0);
    auto skip_ws_comments = [&f]() {
        while (true) {
            int c = f.peek();
            if (c == '#') {
                std::string line;
                std::getline(f, line);
            } else if (std::isspace(c)) {
                f.get();
            } else {
                break;
            }
        }
    };
    PgmHeader hdr;
    int maxval = 0;
    skip_ws_comments();
    f >> hdr.width;
    skip_ws_comments();
    f >> hdr.height;
    skip_ws_comments();
    f >> maxval;
    if (!f || hdr.width < 1 || hdr.height < 1 || maxval != 255)
        throw FormatError("bad PGM header in " + path, static_cast<std::size_t>(f.tellg()));
    f.get();  // single whitespace after maxval
    hdr.bytes.resize(static_cast<std::size_t>(hdr.width) * hdr.height);
    f.read(reinterpret_cast<char*>(hdr.bytes.data()),
           static_cast<std::streamsize>(hdr.bytes.size()));
    if (f.gcount() != static_cast<std::streamsize>(hdr.bytes.size()))
        throw FormatError("truncated PGM " + path,
                          static_cast<std::size_t>(f.gcount()));
    return hdr;
}

}  // namespace

void write_pgm(const ImageGrid& img, const std::string& path) {
    std::vector<std::uint8_t> bytes(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double v = std::clamp(img.data[i], 0.0, 255.0);
        bytes[i] = static_cast<std::uint8_t>(std::lround(v));
    }
    write_pgm_bytes(bytes, img.width, img.height, path);
}

void write_pgm(const BlobMask& mask, const std::string& path) {
    std::vector<std::uint8_t> bytes(mask.bits.size());
    for (std::size_t i = 0; i < mask.bits.size(); ++i) bytes[i] = mask.bits[i] ? 255 : 0;
    write_pgm_bytes(bytes, mask.width, mask.height, path);
}

ImageGrid read_pgm(const std::string& path) {
    const PgmHeader hdr = read_pgm_bytes(path);
    ImageGrid img(hdr.width, hdr.height);
    for (std::size_t i = 0; i < hdr.bytes.size(); ++i) img.data[i] = hdr.bytes[i];
    return img;
}

BlobMask read_pgm_mask(const std::string& path) {
    const PgmHeader hdr = read_pgm_bytes(path);
    BlobMask mask(hdr.width, hdr.height);
    for (std::size_t i = 0; i < hdr.bytes.size(); ++i)
        mask.bits[i] = hdr.bytes[i] >= 128 ? 1 : 0;
    return mask;
}

}  // namespace partforest
