#include "partforest/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "partforest/error.hpp"
#include "partforest/rng.hpp"

namespace partforest {

Action action_from_string(const std::string& s) {
    if (s == "walk") return Action::kWalk;
    if (s == "box") return Action::kBox;
    throw ConfigError("unknown action: " + s);
}

std::string to_string(Action a) { return a == Action::kWalk ? "walk" : "box"; }

ActorStyle default_style() { return ActorStyle{}; }

ActorStyle stress_style() {
    ActorStyle s;
    s.id = "stress";
    // Mirror-equal limbs, weak contrast on the legs, heavier noise. A static
    // decoy bar pair stands in the gap between the legs; it mimics the leg
    // appearance but is absent from the foreground blob.
    s.noise_sigma = 8.0;
    s.bg_texture_amp = 4.0;
    s.limb_radius[0] = s.limb_radius[1] = 16.0;
    s.limb_intensity[0] = s.limb_intensity[1] = 86.0;
    s.torso_intensity = 210.0;
    s.hip_halfwidth = 60.0;
    s.shoulder_halfwidth = 78.0;
    s.sway = 18.0;
    s.knee_wobble = 43.0;
    s.arm_wobble = 26.0;
    s.arm_swing = 0.35;
    const double bar_r = 4.5;
    const double bar_gap = 3.0;  // bar centers at +-bar_gap px around center
    s.decoys.push_back({-bar_gap, 18.0, -bar_gap, 62.0, bar_r, 255.0});
    s.decoys.push_back({+bar_gap, 18.0, +bar_gap, 62.0, bar_r, 255.0});
    return s;
}

ActorStyle style_by_id(const std::string& id) {
    if (id == "default" || id == "s1") return default_style();
    if (id == "stress") return stress_style();
    throw ConfigError("unknown actor style: " + id);
}

Camera camera_for_canvas(int width, int height) {
    Camera cam;
    cam.scale = 0.28;
    cam.cx = width / 2.0;
    cam.cy = height - 12.0;
    return cam;
}

namespace {

struct Vec3 {
    double x = 0, y = 0, z = 0;
};

void set_joint(std::vector<double>& pose, int joint, const Vec3& p) {
    pose[3 * joint] = p.x;
    pose[3 * joint + 1] = p.y;
    pose[3 * joint + 2] = p.z;
}

Vec3 get_joint(const std::vector<double>& pose, int joint) {
    return {pose[3 * joint], pose[3 * joint + 1], pose[3 * joint + 2]};
}

}  // namespace

std::vector<double> pose_at_phase(Action action, const ActorStyle& st, double phase) {
    std::vector<double> pose(kPose3dDim, 0.0);
    const double t = phase;
    const bool walking = action == Action::kWalk;

    const double sway = (walking ? st.sway : 0.3 * st.sway) * std::sin(t);
    const double bob = walking ? st.bob * (0.5 - 0.5 * std::cos(2.0 * t)) : 0.0;

    const Vec3 pelvis{sway, st.hip_y + bob, 0.0};
    const Vec3 thorax{sway, st.thorax_y + bob, 0.0};
    const Vec3 neck{sway, st.neck_y + bob, 0.0};
    const Vec3 head{sway, st.head_y + bob, 0.0};
    set_joint(pose, kPelvis3d, pelvis);
    set_joint(pose, kThorax3d, thorax);
    set_joint(pose, kNeck3d, neck);
    set_joint(pose, kHead3d, head);

    const double shoulder_y = st.neck_y - 8.0 + bob;
    for (int side = 0; side < 2; ++side) {
        const double sgn = side == 0 ? -1.0 : 1.0;  // left = -x
        const double leg_phase = t + side * M_PI;
        const double arm_phase = t + (1 - side) * M_PI;

        // --- leg chain ---
        const Vec3 hip{sway + sgn * st.hip_halfwidth, st.hip_y + bob, 0.0};
        double hip_angle = 0.0, knee_flex = 0.15, knock = 0.0;
        if (walking) {
            hip_angle = st.leg_swing * std::sin(leg_phase);
            knee_flex = st.knee_bend * (0.5 - 0.5 * std::cos(leg_phase));
            // Periodic inward drift of the knees relative to the hips.
            knock = st.knee_wobble * (0.5 - 0.5 * std::cos(2.0 * t + 0.9));
        }
        Vec3 knee{hip.x - sgn * knock,
                  hip.y - st.thigh * std::cos(hip_angle),
                  st.thigh * std::sin(hip_angle)};
        const double shin_angle = hip_angle - knee_flex;
        Vec3 ankle{knee.x,
                   knee.y - st.shin * std::cos(shin_angle),
                   knee.z + st.shin * std::sin(shin_angle)};
        Vec3 foot{ankle.x, ankle.y - 10.0, ankle.z + st.foot};

        // --- arm chain ---
        const Vec3 shoulder{sway + sgn * st.shoulder_halfwidth, shoulder_y, 0.0};
        double swing, elbow_flex, drift;
        if (walking) {
            swing = st.arm_swing * std::sin(arm_phase);
            elbow_flex = st.elbow_bend * (0.6 - 0.4 * std::cos(arm_phase));
            drift = st.arm_wobble * std::sin(arm_phase + 0.7);
        } else {
            const double punch = st.punch * (0.5 + 0.5 * std::sin(arm_phase));
            swing = 0.4 + 1.0 * punch;
            elbow_flex = 1.9 - 1.6 * punch;
            drift = -0.25 * st.shoulder_halfwidth * punch;
        }
        Vec3 elbow{shoulder.x + sgn * drift * 0.4,
                   shoulder.y - st.upper_arm * std::cos(swing),
                   st.upper_arm * std::sin(swing)};
        const double fore_angle = swing + elbow_flex;
        Vec3 wrist{elbow.x + sgn * drift * 0.6,
                   elbow.y - st.forearm * std::cos(fore_angle),
                   elbow.z + st.forearm * std::sin(fore_angle)};
        Vec3 hnd{wrist.x, wrist.y - st.hand * std::cos(fore_angle),
                 wrist.z + st.hand * std::sin(fore_angle)};

        if (side == 0) {
            set_joint(pose, kLHip3d, hip);
            set_joint(pose, kLKne3d, knee);
            set_joint(pose, kLAnk3d, ankle);
            set_joint(pose, kLFoot3d, foot);
            set_joint(pose, kLSho3d, shoulder);
            set_joint(pose, kLElb3d, elbow);
            set_joint(pose, kLWri3d, wrist);
            set_joint(pose, kLHand3d, hnd);
        } else {
            set_joint(pose, kRHip3d, hip);
            set_joint(pose, kRKne3d, knee);
            set_joint(pose, kRAnk3d, ankle);
            set_joint(pose, kRFoot3d, foot);
            set_joint(pose, kRSho3d, shoulder);
            set_joint(pose, kRElb3d, elbow);
            set_joint(pose, kRWri3d, wrist);
            set_joint(pose, kRHand3d, hnd);
        }
    }
    return pose;
}

std::vector<double> project_pose(const std::vector<double>& pose3d, const Camera& cam) {
    if (pose3d.size() != kPose3dDim) throw ShapeError("pose3d must have 60 values");
    std::vector<double> pose2d(kPose2dDim);
    for (int j = 0; j < kNumJoints2d; ++j) {
        const int j3 = kJoint3dIndex[j];
        pose2d[2 * j] = cam.u(pose3d[3 * j3]);
        pose2d[2 * j + 1] = cam.v(pose3d[3 * j3 + 1]);
    }
    return pose2d;
}

namespace {

// Anti-aliased capsule coverage: 1 inside, 0 outside, linear ramp of ~1px at
// the boundary. Coverage crosses 0.5 exactly on the geometric outline.
class CapsulePainter {
public:
    CapsulePainter(ImageGrid& img, std::vector<double>* coverage)
        : img_(img), coverage_(coverage) {}

    void paint(double x0, double y0, double x1, double y1, double radius,
               double intensity) {
        const int min_x = std::max(0, static_cast<int>(std::floor(std::min(x0, x1) - radius - 2)));
        const int max_x = std::min(img_.width - 1, static_cast<int>(std::ceil(std::max(x0, x1) + radius + 2)));
        const int min_y = std::max(0, static_cast<int>(std::floor(std::min(y0, y1) - radius - 2)));
        const int max_y = std::min(img_.height - 1, static_cast<int>(std::ceil(std::max(y0, y1) + radius + 2)));
        const double vx = x1 - x0, vy = y1 - y0;
        const double len2 = vx * vx + vy * vy;
        for (int y = min_y; y <= max_y; ++y) {
            for (int x = min_x; x <= max_x; ++x) {
                double px = x - x0, py = y - y0;
                double s = len2 > 0.0 ? std::clamp((px * vx + py * vy) / len2, 0.0, 1.0) : 0.0;
                const double dx = px - s * vx, dy = py - s * vy;
                const double d = std::sqrt(dx * dx + dy * dy);
                const double c = std::clamp(0.5 + (radius - d), 0.0, 1.0);
                if (c <= 0.0) continue;
                double& v = img_.at(x, y);
                v += c * (intensity - v);
                if (coverage_) {
                    double& a = (*coverage_)[static_cast<std::size_t>(y) * img_.width + x];
                    a = a + c * (1.0 - a);
                }
            }
        }
    }

private:
    ImageGrid& img_;
    std::vector<double>* coverage_;
};

struct Px {
    double u, v;
};

Px to_px(const Camera& cam, const Vec3& p) { return {cam.u(p.x), cam.v(p.y)}; }

}  // namespace

ImageGrid render_background(const ActorStyle& style, int width, int height) {
    ImageGrid bg(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            bg.at(x, y) = style.bg_base +
                          style.bg_texture_amp * std::sin(2.0 * M_PI * x / 17.0) *
                              std::sin(2.0 * M_PI * y / 23.0);
    const Camera cam = camera_for_canvas(width, height);
    CapsulePainter painter(bg, nullptr);
    for (const DecoyBar& bar : style.decoys)
        painter.paint(cam.cx + bar.dx0, cam.cy - bar.y0, cam.cx + bar.dx1,
                      cam.cy - bar.y1, bar.radius, bar.intensity);
    return bg;
}

SyntheticScene render_scene(Action action, const ActorStyle& style, double phase,
                            int canvas_w, int canvas_h, std::uint64_t seed) {
    if (canvas_w < 64 || canvas_h < 64) throw ConfigError("canvas must be at least 64x64");

    SyntheticScene scene;
    scene.rng_seed = seed;
    scene.pose3d = pose_at_phase(action, style, phase);
    const Camera cam = camera_for_canvas(canvas_w, canvas_h);
    scene.pose2d = project_pose(scene.pose3d, cam);
    for (int j = 0; j < kNumJoints2d; ++j) {
        const double u = scene.pose2d[2 * j], v = scene.pose2d[2 * j + 1];
        if (u < 0.0 || u > canvas_w - 1 || v < 0.0 || v > canvas_h - 1)
            throw DataError("joint '" + joint_names_2d()[j] + "' projects out of frame");
    }

    scene.frame = render_background(style, canvas_w, canvas_h);
    std::vector<double> coverage(scene.frame.size(), 0.0);
    CapsulePainter painter(scene.frame, &coverage);

    const auto& p = scene.pose3d;
    auto seg = [&](int a, int b, double radius_mm, double intensity) {
        const Px pa = to_px(cam, get_joint(p, a));
        const Px pb = to_px(cam, get_joint(p, b));
        painter.paint(pa.u, pa.v, pb.u, pb.v, radius_mm * cam.scale, intensity);
    };

    // torso, pelvis and clavicle bars, head
    seg(kPelvis3d, kNeck3d, style.torso_halfwidth, style.torso_intensity);
    seg(kLHip3d, kRHip3d, style.limb_radius[0] * 0.9, style.torso_intensity);
    seg(kLSho3d, kRSho3d, style.limb_radius[0] * 0.8, style.torso_intensity);
    seg(kHead3d, kHead3d, style.head_radius, style.torso_intensity);

    const int arm_chain[2][4] = {{kLSho3d, kLElb3d, kLWri3d, kLHand3d},
                                 {kRSho3d, kRElb3d, kRWri3d, kRHand3d}};
    const int leg_chain[2][4] = {{kLHip3d, kLKne3d, kLAnk3d, kLFoot3d},
                                 {kRHip3d, kRKne3d, kRAnk3d, kRFoot3d}};
    for (int side = 0; side < 2; ++side) {
        const double r = style.limb_radius[side];
        const double li = style.limb_intensity[side];
        for (int k = 0; k + 1 < 4; ++k) {
            seg(arm_chain[side][k], arm_chain[side][k + 1], r * (k == 2 ? 0.7 : 1.0), li);
            seg(leg_chain[side][k], leg_chain[side][k + 1], r * (k == 2 ? 0.7 : 1.0), li);
        }
    }

    // Quantized coverage defines the silhouette; >50% covered counts as figure.
    scene.true_mask = BlobMask(canvas_w, canvas_h);
    for (std::size_t i = 0; i < coverage.size(); ++i) {
        const int cov8 = static_cast<int>(std::lround(255.0 * coverage[i]));
        scene.true_mask.bits[i] = cov8 >= 129 ? 1 : 0;
    }

    if (style.noise_sigma > 0.0) {
        Rng rng(seed);
        for (double& v : scene.frame.data) v += rng.gaussian(0.0, style.noise_sigma);
    }
    for (double& v : scene.frame.data)
        v = static_cast<double>(std::lround(std::clamp(v, 0.0, 255.0)));
    return scene;
}

namespace {
std::uint64_t frame_seed(std::uint64_t seed, SequenceKind kind, int index) {
    const std::uint64_t salt = kind == SequenceKind::kTrain ? 0x9e3779b97f4a7c15ull
                                                            : 0xc2b2ae3d27d4eb4full;
    std::uint64_t h = seed ^ (salt * static_cast<std::uint64_t>(index + 1));
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdull;
    h ^= h >> 33;
    return h;
}
}  // namespace

std::vector<SyntheticScene> synth_sequence(int n_frames, Action action,
                                           const ActorStyle& style, std::uint64_t seed,
                                           SequenceKind kind, int canvas_w, int canvas_h) {
    if (n_frames < 1) throw ConfigError("n_frames must be >= 1");
    std::vector<SyntheticScene> scenes;
    scenes.reserve(n_frames);
    for (int i = 0; i < n_frames; ++i) {
        const double frac = kind == SequenceKind::kTrain
                                ? static_cast<double>(i) / n_frames
                                : (static_cast<double>(i) + 0.5) / n_frames;
        scenes.push_back(render_scene(action, style, 2.0 * M_PI * frac, canvas_w,
                                      canvas_h, frame_seed(seed, kind, i)));
    }
    return scenes;
}

void write_scene_manifest(const std::vector<SceneRecord>& records, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path);
    for (const SceneRecord& r : records) {
        nlohmann::json j{
            {"frame_path", r.frame_path}, {"mask_path", r.mask_path},
            {"pose2d", r.pose2d},         {"pose3d", r.pose3d},
            {"action", r.action},         {"seed", r.seed},
            {"index", r.index},
        };
        f << j.dump() << "\n";
    }
    if (!f) throw DataError("short write: " + path);
}

std::vector<SceneRecord> read_scene_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open: " + path);
    std::vector<SceneRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("bad manifest line " + std::to_string(line_no) + " in " +
                            path + ": " + e.what());
        }
        SceneRecord r;
        r.frame_path = j.at("frame_path").get<std::string>();
        r.mask_path = j.at("mask_path").get<std::string>();
        r.pose2d = j.at("pose2d").get<std::vector<double>>();
        r.pose3d = j.at("pose3d").get<std::vector<double>>();
        r.action = j.at("action").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.index = j.at("index").get<int>();
        if (r.pose2d.size() != kPose2dDim || r.pose3d.size() != kPose3dDim)
            throw DataError("bad pose lengths on manifest line " + std::to_string(line_no));
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace partforest
