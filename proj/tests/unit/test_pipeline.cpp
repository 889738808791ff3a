#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "partforest/background.hpp"
#include "partforest/config.hpp"
#include "partforest/error.hpp"
#include "partforest/pipeline.hpp"

using namespace partforest;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config(const std::string& out) {
    ExperimentConfig cfg;
    cfg.n_train = 16;
    cfg.n_test = 4;
    cfg.seed = 5;
    cfg.negatives_per_type = 16;
    cfg.gpr_optimize = false;  // keep the smoke test quick
    cfg.out_dir = out;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f);
    return std::string((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
}

struct PipelineFixture {
    // One shared tiny experiment for all pipeline cases; rebuilt per binary run.
    PipelineFixture() {
        fs::remove_all(out);
        cfg = tiny_config(out);
        run_synth(cfg, out);
        run_train(cfg, out + "/dataset", out + "/model.pfm", out + "/lifter.gpl");
    }
    std::string out = "test_pipeline_tmp";
    ExperimentConfig cfg = tiny_config(out);
};

PipelineFixture& fixture() {
    static PipelineFixture fx;
    return fx;
}

}  // namespace

TEST_CASE("synth writes a loadable dataset with the configured sizes") {
    auto& fx = fixture();
    const Dataset ds = load_dataset(fx.out + "/dataset");
    CHECK(ds.train.size() == 16);
    CHECK(ds.test.size() == 4);
    CHECK(fs::exists(fx.out + "/dataset/background.pgm"));

    const ImageGrid frame = load_frame(ds, ds.train[3]);
    CHECK(frame.width == fx.cfg.canvas_w);
    const BlobMask mask = load_mask(ds, ds.train[3]);
    CHECK(mask.count() > 100);  // the figure occupies a real area
}

TEST_CASE("training produces a loadable model with trained filters") {
    auto& fx = fixture();
    const PartTreeModel m = load_model(fx.out + "/model.pfm");
    CHECK(m.part_count() == kNumJoints2d);
    for (int p = 0; p < m.part_count(); ++p) {
        for (const PartType& t : m.types[p]) {
            double norm = 0.0;
            for (const double v : t.filter) norm += v * v;
            CHECK(norm > 0.0);
        }
        if (m.parts[p].parent >= 0)
            for (const auto& row : m.pairwise[p].deform)
                for (const DeformWeights& d : row) {
                    CHECK(d.w_dx2 < 0.0);
                    CHECK(d.w_dy2 < 0.0);
                }
    }
    CHECK_NOTHROW(load_lifter(fx.out + "/lifter.gpl"));
}

TEST_CASE("detect and lift produce aligned, readable artifacts") {
    auto& fx = fixture();
    run_detect(fx.cfg, fx.out + "/model.pfm", fx.out + "/dataset", false,
               fx.out + "/detections_baseline.jsonl");
    run_detect(fx.cfg, fx.out + "/model.pfm", fx.out + "/dataset", true,
               fx.out + "/detections_enhanced.jsonl");

    const auto base = read_detections(fx.out + "/detections_baseline.jsonl");
    const auto enh = read_detections(fx.out + "/detections_enhanced.jsonl");
    REQUIRE(base.size() == 4);
    REQUIRE(enh.size() == 4);
    for (std::size_t f = 0; f < base.size(); ++f) {
        CHECK(base[f].has_s_mc);
        CHECK(enh[f].has_s_mc);
        CHECK(enh[f].s_mc >= base[f].s_mc - 1e-12);  // optimizer dominance
        for (int j = 0; j < kNumJoints2d; ++j) {
            CHECK(enh[f].pose2d[2 * j] >= 0.0);
            CHECK(enh[f].pose2d[2 * j] <= fx.cfg.canvas_w);
        }
    }

    run_lift(fx.out + "/lifter.gpl", fx.out + "/detections_enhanced.jsonl",
             fx.out + "/predictions_enhanced.jsonl");
    const auto preds = read_predictions(fx.out + "/predictions_enhanced.jsonl");
    REQUIRE(preds.size() == 4);
    for (const auto& p : preds)
        for (const double v : p.variance) CHECK(v > 0.0);

    run_eval(fx.cfg, fx.out + "/dataset", fx.out + "/detections_enhanced.jsonl",
             fx.out + "/predictions_enhanced.jsonl", fx.out + "/report.json",
             fx.out + "/plots");
    CHECK(fs::exists(fx.out + "/report.json"));
    CHECK(fs::exists(fx.out + "/plots/left_elbow_x.png"));

    run_render(fx.cfg, fx.out + "/dataset", fx.out + "/detections_enhanced.jsonl",
               fx.out + "/overlays");
    CHECK(fs::exists(fx.out + "/overlays/overlay_0003.png"));
}

TEST_CASE("detection is deterministic across repeated runs") {
    auto& fx = fixture();
    run_detect(fx.cfg, fx.out + "/model.pfm", fx.out + "/dataset", true,
               fx.out + "/det_a.jsonl");
    run_detect(fx.cfg, fx.out + "/model.pfm", fx.out + "/dataset", true,
               fx.out + "/det_b.jsonl");
    CHECK(slurp(fx.out + "/det_a.jsonl") == slurp(fx.out + "/det_b.jsonl"));
}

TEST_CASE("synth twice is byte-identical") {
    auto& fx = fixture();
    const std::string again = fx.out + "_again";
    fs::remove_all(again);
    run_synth(fx.cfg, again);
    CHECK(slurp(fx.out + "/dataset/scenes_train.jsonl") ==
          slurp(again + "/dataset/scenes_train.jsonl"));
    CHECK(slurp(fx.out + "/dataset/frames/train_0007.pgm") ==
          slurp(again + "/dataset/frames/train_0007.pgm"));
    fs::remove_all(again);
}

TEST_CASE("eval fails loudly on frame-count mismatches") {
    auto& fx = fixture();
    // a detections file with one line removed
    const auto dets = read_detections(fx.out + "/detections_enhanced.jsonl");
    auto truncated = dets;
    truncated.pop_back();
    write_detections(truncated, fx.out + "/det_short.jsonl");
    CHECK_THROWS_AS(run_eval(fx.cfg, fx.out + "/dataset", fx.out + "/det_short.jsonl",
                             fx.out + "/predictions_enhanced.jsonl",
                             fx.out + "/report2.json", fx.out + "/plots2"),
                    DataError);
}

TEST_CASE("background subtraction on synthetic frames recovers the figure") {
    auto& fx = fixture();
    const Dataset ds = load_dataset(fx.out + "/dataset");
    BackgroundModel bg(load_dataset_background(ds), fx.cfg.bg_alpha, fx.cfg.bg_threshold);
    const ImageGrid frame = load_frame(ds, ds.test[0]);
    const BlobMask truth = load_mask(ds, ds.test[0]);
    const BlobMask extracted = clean_mask(subtract_background(bg, frame), fx.cfg.min_area);

    // imperfect but substantial agreement: most of the true silhouette is
    // recovered and the extra foreground stays small
    std::size_t inter = 0, extra = 0;
    for (std::size_t i = 0; i < truth.bits.size(); ++i) {
        if (truth.bits[i] && extracted.bits[i]) ++inter;
        if (!truth.bits[i] && extracted.bits[i]) ++extra;
    }
    CHECK(inter > 0.7 * truth.count());
    CHECK(extra < 0.5 * truth.count());
}
