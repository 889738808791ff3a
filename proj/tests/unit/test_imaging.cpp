#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "partforest/background.hpp"
#include "partforest/error.hpp"
#include "partforest/image.hpp"
#include "partforest/rng.hpp"

using namespace partforest;

namespace {
ImageGrid constant_grid(int w, int h, double v) { return ImageGrid(w, h, v); }
}

TEST_CASE("update_background blends with the learning rate") {
    BackgroundModel bg(constant_grid(4, 3, 50.0), 0.1, 25.0);
    const BackgroundModel next = update_background(bg, constant_grid(4, 3, 100.0));
    for (const double v : next.mean.data) CHECK(v == doctest::Approx(55.0).epsilon(1e-12));
    CHECK(next.learning_rate == 0.1);
    CHECK(next.threshold == 25.0);
}

TEST_CASE("update_background with alpha 1 replaces the mean") {
    BackgroundModel bg(constant_grid(5, 5, 13.0), 1.0, 10.0);
    ImageGrid frame(5, 5);
    Rng rng(11);
    for (double& v : frame.data) v = rng.uniform(0.0, 255.0);
    const BackgroundModel next = update_background(bg, frame);
    CHECK(next.mean.data == frame.data);
}

TEST_CASE("update_background elementwise example") {
    ImageGrid mean(2, 1);
    mean.data = {0.0, 8.0};
    ImageGrid frame(2, 1);
    frame.data = {4.0, 8.0};
    BackgroundModel bg(mean, 0.25, 1.0);
    const BackgroundModel next = update_background(bg, frame);
    CHECK(next.mean.data[0] == doctest::Approx(1.0));
    CHECK(next.mean.data[1] == doctest::Approx(8.0));
}

TEST_CASE("update_background rejects mismatched shapes") {
    BackgroundModel bg(constant_grid(4, 4, 0.0), 0.5, 1.0);
    CHECK_THROWS_AS(update_background(bg, constant_grid(5, 4, 0.0)), ShapeError);
    CHECK_THROWS_AS(subtract_background(bg, constant_grid(4, 5, 0.0)), ShapeError);
}

TEST_CASE("update_background is a convex combination and converges geometrically") {
    Rng rng(3);
    ImageGrid mean(6, 4), frame(6, 4);
    for (double& v : mean.data) v = rng.uniform(0.0, 255.0);
    for (double& v : frame.data) v = rng.uniform(0.0, 255.0);
    BackgroundModel bg(mean, 0.3, 1.0);

    BackgroundModel cur = bg;
    double prev_err = -1.0;
    for (int it = 0; it < 20; ++it) {
        const BackgroundModel next = update_background(cur, frame);
        double err = 0.0;
        for (std::size_t i = 0; i < frame.size(); ++i) {
            const double lo = std::min(cur.mean.data[i], frame.data[i]);
            const double hi = std::max(cur.mean.data[i], frame.data[i]);
            CHECK(next.mean.data[i] >= lo - 1e-12);
            CHECK(next.mean.data[i] <= hi + 1e-12);
            err = std::max(err, std::abs(next.mean.data[i] - frame.data[i]));
        }
        if (prev_err >= 0.0 && prev_err > 1e-9)
            CHECK(err == doctest::Approx(prev_err * 0.7).epsilon(1e-9));
        prev_err = err;
        cur = next;
    }
}

TEST_CASE("subtract_background thresholds strictly") {
    ImageGrid mean(3, 1);
    mean.data = {100.0, 100.0, 100.0};
    ImageGrid frame(3, 1);
    frame.data = {130.0, 100.0, 125.0};  // diff 30, 0, 25
    BackgroundModel bg(mean, 0.5, 25.0);
    const BlobMask mask = subtract_background(bg, frame);
    CHECK(mask.bits[0] == 1);   // 30 > 25
    CHECK(mask.bits[1] == 0);   // identical
    CHECK(mask.bits[2] == 0);   // tie goes to background
}

TEST_CASE("subtract_background of the mean itself is empty") {
    Rng rng(5);
    ImageGrid mean(8, 8);
    for (double& v : mean.data) v = rng.uniform(0.0, 255.0);
    BackgroundModel bg(mean, 0.5, 10.0);
    CHECK(subtract_background(bg, mean).count() == 0);
}

TEST_CASE("clean_mask drops small components") {
    BlobMask mask(10, 10);
    // 3-pixel L shape
    mask.at(1, 1) = mask.at(1, 2) = mask.at(2, 2) = 1;
    CHECK(clean_mask(mask, 4).count() == 0);
    CHECK(clean_mask(mask, 3).count() == 3);
}

TEST_CASE("clean_mask keeps big components intact") {
    BlobMask mask(20, 20);
    for (int y = 3; y < 13; ++y)
        for (int x = 3; x < 13; ++x) mask.at(x, y) = 1;
    const BlobMask cleaned = clean_mask(mask, 4);
    CHECK(cleaned.bits == mask.bits);
}

TEST_CASE("clean_mask keeps only components above the area floor") {
    BlobMask mask(30, 10);
    mask.at(1, 1) = mask.at(2, 1) = 1;  // area 2
    for (int y = 2; y < 7; ++y)
        for (int x = 10; x < 20; ++x) mask.at(x, y) = 1;  // area 50
    const BlobMask cleaned = clean_mask(mask, 10);
    const BlobMask expected = oracle::filter_small_components(mask, 10);
    CHECK(cleaned.bits == expected.bits);
    CHECK(cleaned.count() == 50);
}

TEST_CASE("clean_mask agrees with the union-find oracle on random masks") {
    Rng rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        BlobMask mask(17, 13);
        for (auto& b : mask.bits) b = rng.uniform() < 0.45 ? 1 : 0;
        const int min_area = rng.uniform_int(1, 9);
        CHECK(clean_mask(mask, min_area).bits ==
              oracle::filter_small_components(mask, min_area).bits);
    }
}

TEST_CASE("overlap_ratio counts foreground inside the box") {
    BlobMask mask(16, 16, 1);
    CHECK(overlap_ratio(mask, {2, 2, 4, 4}) == doctest::Approx(1.0));

    BlobMask empty(16, 16, 0);
    CHECK(overlap_ratio(empty, {2, 2, 4, 4}) == doctest::Approx(0.0));

    BlobMask half(16, 16, 0);
    for (int y = 4; y < 6; ++y)
        for (int x = 4; x < 8; ++x) half.at(x, y) = 1;  // 8 pixels
    CHECK(overlap_ratio(half, {4, 4, 4, 4}) == doctest::Approx(0.5));
}

TEST_CASE("overlap_ratio treats out-of-bounds as background") {
    BlobMask mask(8, 8, 1);
    CHECK(overlap_ratio(mask, {-2, 0, 4, 4}) == doctest::Approx(0.5));
    CHECK(overlap_ratio(mask, {100, 100, 4, 4}) == doctest::Approx(0.0));
}

TEST_CASE("overlap_ratio is monotone in the foreground set") {
    Rng rng(42);
    BlobMask a(12, 12);
    for (auto& b : a.bits) b = rng.uniform() < 0.3 ? 1 : 0;
    BlobMask grown = a;
    for (auto& b : grown.bits)
        if (!b && rng.uniform() < 0.3) b = 1;
    for (int trial = 0; trial < 30; ++trial) {
        const BoundingBox box{rng.uniform_int(-3, 10), rng.uniform_int(-3, 10),
                              rng.uniform_int(1, 6), rng.uniform_int(1, 6)};
        CHECK(overlap_ratio(grown, box) >= overlap_ratio(a, box) - 1e-12);
    }
}

TEST_CASE("MaskIntegral matches the direct overlap computation") {
    Rng rng(7);
    BlobMask mask(21, 14);
    for (auto& b : mask.bits) b = rng.uniform() < 0.4 ? 1 : 0;
    const MaskIntegral integral(mask);
    for (int trial = 0; trial < 60; ++trial) {
        const BoundingBox box{rng.uniform_int(-4, 22), rng.uniform_int(-4, 15),
                              rng.uniform_int(1, 9), rng.uniform_int(1, 9)};
        CHECK(integral.overlap_ratio(box) == doctest::Approx(overlap_ratio(mask, box)));
    }
}

TEST_CASE("pgm round-trips frames and masks") {
    const std::string dir = "test_imaging_tmp";
    std::filesystem::create_directories(dir);
    Rng rng(13);
    ImageGrid img(23, 17);
    for (double& v : img.data) v = std::floor(rng.uniform(0.0, 256.0));
    write_pgm(img, dir + "/frame.pgm");
    const ImageGrid back = read_pgm(dir + "/frame.pgm");
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.data == img.data);

    BlobMask mask(9, 11);
    for (auto& b : mask.bits) b = rng.uniform() < 0.5 ? 1 : 0;
    write_pgm(mask, dir + "/mask.pgm");
    CHECK(read_pgm_mask(dir + "/mask.pgm").bits == mask.bits);
    std::filesystem::remove_all(dir);
}

TEST_CASE("dilate grows by the disc radius") {
    BlobMask mask(11, 11);
    mask.at(5, 5) = 1;
    const BlobMask grown = dilate(mask, 2.0);
    CHECK(grown.at(5, 5) == 1);
    CHECK(grown.at(7, 5) == 1);
    CHECK(grown.at(5, 3) == 1);
    CHECK(grown.at(8, 5) == 0);
    CHECK(grown.at(7, 7) == 0);  // sqrt(8) > 2
}
