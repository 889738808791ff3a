#pragma once

#include <array>
#include <string>
#include <vector>

namespace partforest {

// Canonical 13-joint 2D skeleton (head-rooted tree) and the 20-joint 3D
// skeleton it is lifted to. The 2D order below is also the part order of the
// default tree model, so pose vectors and detections index identically.

inline constexpr int kNumJoints2d = 13;
inline constexpr int kNumJoints3d = 20;
inline constexpr int kPose2dDim = 2 * kNumJoints2d;  // 26
inline constexpr int kPose3dDim = 3 * kNumJoints3d;  // 60

enum Joint2d : int {
    kHead = 0,
    kLSho, kRSho,
    kLElb, kRElb,
    kLWri, kRWri,
    kLHip, kRHip,
    kLKne, kRKne,
    kLAnk, kRAnk,
};

enum Joint3d : int {
    kPelvis3d = 0, kThorax3d, kNeck3d, kHead3d,
    kLSho3d, kLElb3d, kLWri3d, kLHand3d,
    kRSho3d, kRElb3d, kRWri3d, kRHand3d,
    kLHip3d, kLKne3d, kLAnk3d, kLFoot3d,
    kRHip3d, kRKne3d, kRAnk3d, kRFoot3d,
};

inline const std::array<std::string, kNumJoints2d>& joint_names_2d() {
    static const std::array<std::string, kNumJoints2d> names = {
        "head",
        "left_shoulder", "right_shoulder",
        "left_elbow", "right_elbow",
        "left_wrist", "right_wrist",
        "left_hip", "right_hip",
        "left_knee", "right_knee",
        "left_ankle", "right_ankle",
    };
    return names;
}

// Parent of each 2D joint in the tree (-1 for the head root). Indices are in
// topological order: every parent precedes its children.
inline constexpr std::array<int, kNumJoints2d> kJointParent = {
    -1,      // head
    0, 0,    // shoulders
    1, 2,    // elbows
    3, 4,    // wrists
    1, 2,    // hips (torso links hang off the shoulders)
    7, 8,    // knees
    9, 10,   // ankles
};

// 3D index of each 2D joint.
inline constexpr std::array<int, kNumJoints2d> kJoint3dIndex = {
    kHead3d,
    kLSho3d, kRSho3d,
    kLElb3d, kRElb3d,
    kLWri3d, kRWri3d,
    kLHip3d, kRHip3d,
    kLKne3d, kRKne3d,
    kLAnk3d, kRAnk3d,
};

// Left/right sibling pairs prone to claiming the same image evidence.
struct SiblingPair {
    std::string label;
    int left;
    int right;
};

inline const std::vector<SiblingPair>& double_count_pairs() {
    static const std::vector<SiblingPair> pairs = {
        {"elbows", kLElb, kRElb},
        {"wrists", kLWri, kRWri},
        {"knees", kLKne, kRKne},
        {"ankles", kLAnk, kRAnk},
    };
    return pairs;
}

// Mixture sizes: flexible joints get 6 types, the rest 5.
inline int default_type_count(int joint) {
    switch (joint) {
        case kLElb: case kRElb:
        case kLWri: case kRWri:
        case kLKne: case kRKne:
        case kLAnk: case kRAnk:
            return 6;
        default:
            return 5;
    }
}

}  // namespace partforest
