#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "partforest/image.hpp"
#include "partforest/skeleton.hpp"

namespace partforest {

enum class Action { kWalk, kBox };

Action action_from_string(const std::string& s);
std::string to_string(Action a);

// Fixed orthographic camera: u = cx + scale*X, v = cy - scale*Y (depth Z is
// dropped). cy sits near the bottom so Y=0 is the ground line.
struct Camera {
    double scale = 0.28;  // px per mm
    double cx = 80.0;
    double cy = 148.0;

    double u(double x_mm) const { return cx + scale * x_mm; }
    double v(double y_mm) const { return cy - scale * y_mm; }
};

// Static limb-like bar painted into the background (never part of the
// figure silhouette). Coordinates are pixels relative to (camera cx, ground).
struct DecoyBar {
    double dx0 = 0.0, y0 = 0.0;  // y measured up from the ground line, px
    double dx1 = 0.0, y1 = 0.0;
    double radius = 5.0;
    double intensity = 255.0;
};

// Appearance and motion parameters for one synthetic actor. Lengths are mm,
// intensities are 8-bit units, amplitudes are mm or radians as named.
struct ActorStyle {
    std::string id = "default";

    // background and noise
    double bg_base = 52.0;
    double bg_texture_amp = 5.0;
    double noise_sigma = 4.0;

    // figure appearance; [0]=left side, [1]=right side
    double torso_halfwidth = 46.0;
    double head_radius = 24.0;
    double limb_radius[2] = {11.0, 11.0};
    double limb_intensity[2] = {230.0, 230.0};
    double torso_intensity = 230.0;

    // skeleton segment geometry (mm; Y up, ground at 0)
    double hip_y = 240.0;
    double thorax_y = 330.0;
    double neck_y = 388.0;
    double head_y = 430.0;
    double shoulder_halfwidth = 80.0;
    double hip_halfwidth = 72.0;
    double upper_arm = 95.0;
    double forearm = 88.0;
    double hand = 28.0;
    double thigh = 112.0;
    double shin = 108.0;
    double foot = 30.0;

    // motion amplitudes
    double sway = 22.0;            // lateral body sway, mm
    double bob = 6.0;              // vertical bounce, mm
    double leg_swing = 0.5;        // sagittal hip swing, rad
    double knee_bend = 0.55;       // rad
    double knee_wobble = 18.0;     // lateral knee drift relative to hip, mm
    double arm_swing = 0.45;       // rad
    double elbow_bend = 0.5;       // rad
    double arm_wobble = 14.0;      // lateral wrist/elbow drift, mm
    double punch = 1.0;            // box action arm extension, rad

    std::vector<DecoyBar> decoys;
};

ActorStyle default_style();
// High left/right symmetry plus a static decoy leg pair between the legs;
// built to provoke double counting in appearance-only detection.
ActorStyle stress_style();
ActorStyle style_by_id(const std::string& id);

struct SyntheticScene {
    std::vector<double> pose3d;  // kPose3dDim, mm
    std::vector<double> pose2d;  // kPose2dDim, px
    ImageGrid frame;
    BlobMask true_mask;
    std::uint64_t rng_seed = 0;
};

Camera camera_for_canvas(int width, int height);

// 3D joint positions (mm) of the action cycle at the given phase [0, 2pi).
std::vector<double> pose_at_phase(Action action, const ActorStyle& style, double phase);

// Project the 13 tracked joints of a 60-dim 3D pose.
std::vector<double> project_pose(const std::vector<double>& pose3d, const Camera& cam);

// The empty scene: textured background plus any static decoys, no noise.
ImageGrid render_background(const ActorStyle& style, int width, int height);

// Deterministic for fixed (action, style, phase, canvas, seed). Throws
// DataError if any tracked joint projects outside the canvas.
SyntheticScene render_scene(Action action, const ActorStyle& style, double phase,
                            int canvas_w, int canvas_h, std::uint64_t seed);

enum class SequenceKind { kTrain, kTest };

// Train frames sample phases i/n; test frames sample (i+0.5)/n so they are
// held out while still covering the whole cycle.
std::vector<SyntheticScene> synth_sequence(int n_frames, Action action,
                                           const ActorStyle& style, std::uint64_t seed,
                                           SequenceKind kind, int canvas_w = 160,
                                           int canvas_h = 160);

// One manifest line per scene: frame/mask paths plus ground truth.
struct SceneRecord {
    std::string frame_path;
    std::string mask_path;
    std::vector<double> pose2d;
    std::vector<double> pose3d;
    std::string action;
    std::uint64_t seed = 0;
    int index = 0;
};

void write_scene_manifest(const std::vector<SceneRecord>& records, const std::string& path);
std::vector<SceneRecord> read_scene_manifest(const std::string& path);

}  // namespace partforest
