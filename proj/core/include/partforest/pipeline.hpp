#pragma once

#include <string>
#include <vector>

#include "partforest/config.hpp"
#include "partforest/gp.hpp"
#include "partforest/image.hpp"
#include "partforest/infer.hpp"
#include "partforest/metrics.hpp"
#include "partforest/model.hpp"
#include "partforest/synth.hpp"

namespace partforest {

// On-disk dataset produced by run_synth: frames/ and masks/ as PGM, one
// manifest per split, plus the empty-scene background capture.
struct Dataset {
    std::string dir;
    std::vector<SceneRecord> train;
    std::vector<SceneRecord> test;
};

Dataset load_dataset(const std::string& dir);
ImageGrid load_frame(const Dataset& ds, const SceneRecord& rec);
BlobMask load_mask(const Dataset& ds, const SceneRecord& rec);
ImageGrid load_dataset_background(const Dataset& ds);

// Serialized detection line; positions are joint centers in pixels.
struct DetectionRecord {
    int frame_index = 0;
    std::vector<std::string> part_names;
    std::vector<double> pose2d;  // kPose2dDim, canonical joint order
    std::vector<int> types;
    double root_score = 0.0;
    bool has_s_mc = false;
    double s_mc = 0.0;
    std::vector<std::string> flags;
};

void write_detections(const std::vector<DetectionRecord>& records,
                      const std::string& path);
std::vector<DetectionRecord> read_detections(const std::string& path);
DetectionRecord to_record(const Detection& det, const PartTreeModel& m);

struct PredictionRecord {
    int frame_index = 0;
    std::vector<double> pose3d;
    std::vector<double> variance;
};

void write_predictions(const std::vector<PredictionRecord>& records,
                       const std::string& path);
std::vector<PredictionRecord> read_predictions(const std::string& path);

// Supervised fitting of the part tree from ground-truth 2D joints: offset
// clustering for types, ridge templates, generative pairwise fits.
PartTreeModel train_part_model(const ExperimentConfig& cfg, const Dataset& ds);

// One frame through the detector. Baseline: plain message passing and
// backtracking. Enhanced: blob-gated passing, candidate enumeration and the
// global multi-cue optimization, seeded so its search covers the baseline
// configuration.
struct FrameDetection {
    Detection detection;
    BlobMask mask;
};

FrameDetection detect_frame(const ExperimentConfig& cfg, const PartTreeModel& m,
                            const ImageGrid& frame, const BlobMask& mask,
                            bool enhanced);

int model_nms_radius(const PartTreeModel& m);

// CLI entry points. All are deterministic for a fixed config and seed.
void run_synth(const ExperimentConfig& cfg, const std::string& out_dir);
void run_train(const ExperimentConfig& cfg, const std::string& dataset_dir,
               const std::string& model_path, const std::string& lifter_path);
void run_detect(const ExperimentConfig& cfg, const std::string& model_path,
                const std::string& dataset_dir, bool enhanced,
                const std::string& detections_path);
void run_lift(const std::string& lifter_path, const std::string& detections_path,
              const std::string& predictions_path);
void run_eval(const ExperimentConfig& cfg, const std::string& dataset_dir,
              const std::string& detections_path, const std::string& predictions_path,
              const std::string& report_path, const std::string& plot_dir);
void run_render(const ExperimentConfig& cfg, const std::string& dataset_dir,
                const std::string& detections_path, const std::string& overlay_dir);

}  // namespace partforest
