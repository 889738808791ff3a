#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "partforest/skeleton.hpp"

namespace partforest {

struct PartSpec {
    int part_id = 0;
    int parent = -1;  // -1 for the root
    int n_types = 1;
    int template_w = 4;  // cells
    int template_h = 4;
    std::string name;
};

// One mixture component of a part: a linear filter over a feature crop plus
// its type bias and the mean offset from the parent (cells).
struct PartType {
    std::vector<double> filter;
    double bias = 0.0;
    double anchor_dx = 0.0;
    double anchor_dy = 0.0;
};

// Quadratic deformation weights applied to [dx dx^2 dy dy^2] plus the type
// co-occurrence table. The quadratic terms are strictly negative so the
// distance transform stays concave.
struct DeformWeights {
    double w_dx = 0.0;
    double w_dx2 = -0.01;
    double w_dy = 0.0;
    double w_dy2 = -0.01;
};

struct PairwiseParams {
    // co_occurrence[child_type][parent_type]
    std::vector<std::vector<double>> co_occurrence;
    // deform[child_type][parent_type]
    std::vector<std::vector<DeformWeights>> deform;
};

struct FeatureConfig {
    int cell_size = 8;
    int n_orientations = 9;
};

struct PartTreeModel {
    std::vector<PartSpec> parts;                 // topological order
    std::vector<std::vector<PartType>> types;    // per part
    std::vector<PairwiseParams> pairwise;        // per part; unused for the root
    FeatureConfig feature_config;
    std::uint32_t version = 1;

    int part_count() const { return static_cast<int>(parts.size()); }
    int feature_len(int part) const {
        return parts[part].template_w * parts[part].template_h *
               feature_config.n_orientations;
    }
    // Throws if parent links do not form a single tree in topological order.
    void validate() const;
};

// Part skeleton for the default 13-joint tree; types/pairwise left empty.
PartTreeModel make_default_skeleton(const FeatureConfig& fc, int template_cells = 4);

struct Offset2d {
    double dx = 0.0;
    double dy = 0.0;
};

struct ClusterResult {
    std::vector<int> labels;          // per sample
    std::vector<Offset2d> centroids;  // per cluster, the type anchors
};

// Lloyd's k-means over parent-relative offsets: seeded, up to 100 iterations,
// best of 10 restarts by within-cluster SSE. Ties go to the lowest cluster
// index.
ClusterResult cluster_part_types(const std::vector<Offset2d>& offsets, int n_types,
                                 std::uint64_t seed = 17);

struct TemplateFit {
    std::vector<double> filter;
    double bias = 0.0;
};

// Ridge discriminant to +-1 targets; the intercept is unpenalized.
TemplateFit fit_templates(const std::vector<std::vector<double>>& positives,
                          const std::vector<std::vector<double>>& negatives,
                          double ridge_lambda);

// Per (child type, parent type) offset samples, already relative to the
// child's type anchor.
struct PairwiseSamples {
    // offsets[child_type][parent_type] -> list of (dx, dy), anchor-relative
    std::vector<std::vector<std::vector<Offset2d>>> offsets;
};

PairwiseParams fit_pairwise(const PairwiseSamples& samples);

void save_model(const PartTreeModel& m, const std::string& path);
PartTreeModel load_model(const std::string& path);

}  // namespace partforest
