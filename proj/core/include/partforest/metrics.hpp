#pragma once

#include <string>
#include <utility>
#include <vector>

#include "partforest/skeleton.hpp"

namespace partforest {

// One 26-dim 2D pose or 60-dim 3D pose per frame.
using PoseSeq = std::vector<std::vector<double>>;

// Distance used as the PCK reference length: shoulder midpoint (the neck
// stand-in of the 13-joint set) to hip midpoint, from the ground truth.
double torso_diag(const std::vector<double>& gt_pose2d);

struct PckResult {
    std::vector<double> per_joint;              // kNumJoints2d accuracies
    double mean = 0.0;
    std::vector<std::vector<int>> correct;      // [frame][joint] 0/1
};

// A joint counts as correct within alpha_pck * torso_diag pixels.
PckResult pck(const PoseSeq& detections2d, const PoseSeq& gt2d, double alpha_pck = 0.2);

// Mean Euclidean error over frames and the 20 3D joints, in mm.
double mpjpe(const PoseSeq& pred3d, const PoseSeq& gt3d);

struct DoubleCountStats {
    int eligible = 0;    // (frame, pair) events with gt siblings >= 2*min_sep apart
    int collisions = 0;  // of those, detections within min_sep
    double rate = 0.0;   // collisions / eligible (0 when nothing is eligible)
    std::vector<std::vector<std::string>> per_frame;  // colliding pair labels
};

DoubleCountStats double_count_stats(const PoseSeq& detections2d, const PoseSeq& gt2d,
                                    double min_sep = 8.0);

inline double double_count_rate(const PoseSeq& detections2d, const PoseSeq& gt2d,
                                double min_sep = 8.0) {
    return double_count_stats(detections2d, gt2d, min_sep).rate;
}

// Aligned (predicted, ground truth) values of one 3D joint coordinate per
// frame, for the trace plots. axis: 0=x, 1=y, 2=z.
std::vector<std::pair<double, double>> joint_trace(const PoseSeq& pred3d,
                                                   const PoseSeq& gt3d, int joint,
                                                   int axis);

struct FrameRecord {
    int frame_index = 0;
    double mpjpe_mm = 0.0;
    std::vector<int> joint_correct;
    std::vector<std::string> collisions;
};

struct EvalReport {
    std::vector<double> per_joint_pck;
    double mean_pck = 0.0;
    double mpjpe_mm = 0.0;
    double double_count_rate = 0.0;
    double alpha_pck = 0.2;
    double min_sep = 8.0;
    std::vector<FrameRecord> frames;
};

EvalReport build_report(const PoseSeq& det2d, const PoseSeq& gt2d, const PoseSeq& pred3d,
                        const PoseSeq& gt3d, double alpha_pck, double min_sep);

void write_report_json(const EvalReport& report, const std::string& path);

}  // namespace partforest
