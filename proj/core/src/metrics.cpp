#include "partforest/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "partforest/error.hpp"

namespace partforest {

namespace {

double joint_dist_2d(const std::vector<double>& a, const std::vector<double>& b, int j) {
    const double dx = a[2 * j] - b[2 * j];
    const double dy = a[2 * j + 1] - b[2 * j + 1];
    return std::sqrt(dx * dx + dy * dy);
}

void require_pose_seq(const PoseSeq& seq, std::size_t dim, const char* what) {
    for (const auto& pose : seq)
        if (pose.size() != dim)
            throw ShapeError(std::string(what) + ": pose has wrong dimension");
}

}  // namespace

double torso_diag(const std::vector<double>& gt) {
    const double nx = 0.5 * (gt[2 * kLSho] + gt[2 * kRSho]);
    const double ny = 0.5 * (gt[2 * kLSho + 1] + gt[2 * kRSho + 1]);
    const double hx = 0.5 * (gt[2 * kLHip] + gt[2 * kRHip]);
    const double hy = 0.5 * (gt[2 * kLHip + 1] + gt[2 * kRHip + 1]);
    return std::sqrt((nx - hx) * (nx - hx) + (ny - hy) * (ny - hy));
}

PckResult pck(const PoseSeq& detections2d, const PoseSeq& gt2d, double alpha_pck) {
    if (detections2d.size() != gt2d.size())
        throw ShapeError("pck: detection/ground-truth frame counts differ");
    if (gt2d.empty()) throw ShapeError("pck: empty sequence");
    require_pose_seq(detections2d, kPose2dDim, "pck detections");
    require_pose_seq(gt2d, kPose2dDim, "pck ground truth");

    PckResult out;
    out.per_joint.assign(kNumJoints2d, 0.0);
    out.correct.resize(detections2d.size());
    for (std::size_t f = 0; f < detections2d.size(); ++f) {
        const double ref = alpha_pck * torso_diag(gt2d[f]);
        out.correct[f].assign(kNumJoints2d, 0);
        for (int j = 0; j < kNumJoints2d; ++j) {
            if (joint_dist_2d(detections2d[f], gt2d[f], j) <= ref) {
                out.correct[f][j] = 1;
                out.per_joint[j] += 1.0;
            }
        }
    }
    for (double& v : out.per_joint) v /= static_cast<double>(detections2d.size());
    out.mean = 0.0;
    for (const double v : out.per_joint) out.mean += v;
    out.mean /= kNumJoints2d;
    return out;
}

double mpjpe(const PoseSeq& pred3d, const PoseSeq& gt3d) {
    if (pred3d.size() != gt3d.size())
        throw ShapeError("mpjpe: prediction/ground-truth frame counts differ");
    if (gt3d.empty()) throw ShapeError("mpjpe: empty sequence");
    require_pose_seq(pred3d, kPose3dDim, "mpjpe predictions");
    require_pose_seq(gt3d, kPose3dDim, "mpjpe ground truth");

    double total = 0.0;
    for (std::size_t f = 0; f < pred3d.size(); ++f) {
        for (int j = 0; j < kNumJoints3d; ++j) {
            double d2 = 0.0;
            for (int a = 0; a < 3; ++a) {
                const double d = pred3d[f][3 * j + a] - gt3d[f][3 * j + a];
                d2 += d * d;
            }
            total += std::sqrt(d2);
        }
    }
    return total / (static_cast<double>(pred3d.size()) * kNumJoints3d);
}

DoubleCountStats double_count_stats(const PoseSeq& detections2d, const PoseSeq& gt2d,
                                    double min_sep) {
    if (detections2d.size() != gt2d.size())
        throw ShapeError("double_count_stats: frame counts differ");
    require_pose_seq(detections2d, kPose2dDim, "double_count detections");
    require_pose_seq(gt2d, kPose2dDim, "double_count ground truth");

    auto sibling_sep = [](const std::vector<double>& pose, const SiblingPair& pair) {
        const double dx = pose[2 * pair.left] - pose[2 * pair.right];
        const double dy = pose[2 * pair.left + 1] - pose[2 * pair.right + 1];
        return std::sqrt(dx * dx + dy * dy);
    };

    DoubleCountStats out;
    out.per_frame.resize(detections2d.size());
    for (std::size_t f = 0; f < detections2d.size(); ++f) {
        for (const SiblingPair& pair : double_count_pairs()) {
            if (sibling_sep(gt2d[f], pair) < 2.0 * min_sep) continue;
            ++out.eligible;
            if (sibling_sep(detections2d[f], pair) <= min_sep) {
                ++out.collisions;
                out.per_frame[f].push_back(pair.label);
            }
        }
    }
    out.rate = out.eligible > 0 ? static_cast<double>(out.collisions) / out.eligible : 0.0;
    return out;
}

std::vector<std::pair<double, double>> joint_trace(const PoseSeq& pred3d,
                                                   const PoseSeq& gt3d, int joint,
                                                   int axis) {
    if (pred3d.size() != gt3d.size()) throw ShapeError("joint_trace: frame counts differ");
    if (joint < 0 || joint >= kNumJoints3d || axis < 0 || axis > 2)
        throw ConfigError("joint_trace: joint/axis out of range");
    require_pose_seq(pred3d, kPose3dDim, "joint_trace predictions");
    require_pose_seq(gt3d, kPose3dDim, "joint_trace ground truth");

    std::vector<std::pair<double, double>> out;
    out.reserve(pred3d.size());
    for (std::size_t f = 0; f < pred3d.size(); ++f)
        out.emplace_back(pred3d[f][3 * joint + axis], gt3d[f][3 * joint + axis]);
    return out;
}

EvalReport build_report(const PoseSeq& det2d, const PoseSeq& gt2d, const PoseSeq& pred3d,
                        const PoseSeq& gt3d, double alpha_pck, double min_sep) {
    EvalReport report;
    report.alpha_pck = alpha_pck;
    report.min_sep = min_sep;

    const PckResult pr = pck(det2d, gt2d, alpha_pck);
    report.per_joint_pck = pr.per_joint;
    report.mean_pck = pr.mean;
    report.mpjpe_mm = mpjpe(pred3d, gt3d);
    const DoubleCountStats dc = double_count_stats(det2d, gt2d, min_sep);
    report.double_count_rate = dc.rate;

    report.frames.resize(det2d.size());
    for (std::size_t f = 0; f < det2d.size(); ++f) {
        FrameRecord& fr = report.frames[f];
        fr.frame_index = static_cast<int>(f);
        fr.joint_correct = pr.correct[f];
        fr.collisions = dc.per_frame[f];
        fr.mpjpe_mm = mpjpe({pred3d[f]}, {gt3d[f]});
    }
    return report;
}

void write_report_json(const EvalReport& report, const std::string& path) {
    nlohmann::json joints = nlohmann::json::object();
    for (int j = 0; j < kNumJoints2d; ++j)
        joints[joint_names_2d()[j]] = report.per_joint_pck[j];

    nlohmann::json frames = nlohmann::json::array();
    for (const FrameRecord& fr : report.frames)
        frames.push_back({{"frame_index", fr.frame_index},
                          {"mpjpe_mm", fr.mpjpe_mm},
                          {"joint_correct", fr.joint_correct},
                          {"collisions", fr.collisions}});

    const nlohmann::json j{
        {"per_joint_pck", joints},
        {"mean_pck", report.mean_pck},
        {"mpjpe_mm", report.mpjpe_mm},
        {"double_count_rate", report.double_count_rate},
        {"alpha_pck", report.alpha_pck},
        {"min_sep", report.min_sep},
        {"frames", frames},
    };
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << j.dump(2) << "\n";
    if (!f) throw DataError("short write: " + path);
}

}  // namespace partforest
