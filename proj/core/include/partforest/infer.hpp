#pragma once

#include <optional>
#include <string>
#include <vector>

#include "partforest/hog.hpp"
#include "partforest/image.hpp"
#include "partforest/model.hpp"

namespace partforest {

// Finite stand-in for -infinity: keeps distance transforms well defined while
// drowning out any legitimate score. Used both for out-of-bounds template
// anchors and for blob-gated cells.
inline constexpr double kScoreSentinel = -1e6;

// Shared by the transform, the scorer and the test oracles so the floating
// point expression tree is identical everywhere.
inline double deform_score_1d(double w_lin, double w_quad, double d) {
    return w_lin * d + w_quad * d * d;
}

// Per (part, type) unary score maps in cell coordinates.
struct ResponseStack {
    int cells_x = 0;
    int cells_y = 0;
    int cell_size = 0;
    std::vector<std::vector<ImageGrid>> maps;  // [part][type]
};

// response(part, type, cell) = filter . crop(cell) + bias; anchors whose
// window leaves the map score kScoreSentinel.
ResponseStack part_responses(const FeatureMap& fm, const PartTreeModel& m);

struct DistanceTransformResult {
    ImageGrid transformed;
    std::vector<int> argmax_x;  // maximizing source cell per output cell
    std::vector<int> argmax_y;
};

// transformed(q) = max_p score(p) + w.(dx, dx^2, dy, dy^2), (dx,dy) = p-q-anchor.
// Two separable lower-envelope passes, O(cells); argmax ties break to the
// lower row-major index.
DistanceTransformResult distance_transform(const ImageGrid& score,
                                           const DeformWeights& deform,
                                           double anchor_dx, double anchor_dy);

// Backtracking state from one leaf-to-root sweep.
struct EdgeTables {
    int n_child_types = 0;
    int n_parent_types = 0;
    // Indexed [t_child * n_parent_types + t_parent][cell]
    std::vector<std::vector<int>> arg_x;
    std::vector<std::vector<int>> arg_y;
    // Indexed [t_parent][cell]: child type winning the max.
    std::vector<std::vector<int>> best_child_type;
};

struct MessageTables {
    int cells_x = 0;
    int cells_y = 0;
    std::vector<EdgeTables> edges;   // per part; root entry unused
    std::vector<int> root_best_type;  // per cell
};

struct RootScore {
    ImageGrid map;
    MessageTables tables;
};

// Leaf-to-root sweep. With gate=true every part's unary scores are replaced
// by the sentinel wherever the part box overlaps the mask below thresh2,
// before any transform runs.
RootScore pass_messages(const ResponseStack& rs, const PartTreeModel& m,
                        const BlobMask* mask, bool gate, double thresh2 = 0.2);

struct RootPeak {
    int cx = 0;
    int cy = 0;
    double score = 0.0;
};

// Greedy Euclidean NMS, radius = the largest template dimension in cells.
// Peaks sort by (score desc, row-major index asc); scores <= min_score drop.
std::vector<RootPeak> find_root(const ImageGrid& root_map, double min_score,
                                int nms_radius);

struct PartPlacement {
    int part_id = 0;
    int cx = 0;
    int cy = 0;
    int type = 0;
};

struct Detection {
    std::vector<PartPlacement> parts;  // indexed by part id
    double root_score = 0.0;
    std::optional<double> s_mc;
    std::vector<std::string> flags;
    int frame_index = -1;
};

// Pixel-space box and joint position of a placement.
BoundingBox part_box(const PartTreeModel& m, int part, int cx, int cy);
double placement_x_px(const PartTreeModel& m, const PartPlacement& p);
double placement_y_px(const PartTreeModel& m, const PartPlacement& p);

// Root-to-leaf argmax trace. Produces the plain tree-model detection; this is
// the configuration that can double count left/right siblings.
Detection backtrack(int root_cx, int root_cy, const RootScore& rs,
                    const PartTreeModel& m);

struct Candidate {
    int part_id = 0;
    int type = 0;
    int cx = 0;
    int cy = 0;
    double unary = 0.0;         // response including bias
    double blob_overlap = 0.0;
    bool is_baseline = false;
};

struct CandidateSet {
    std::vector<Candidate> candidates;
    bool fallback_only = false;  // nothing cleared thresh2; baseline only
};

// Per part: local maxima of each type map with blob overlap >= thresh2, the
// best top_n per type, plus the baseline placement.
std::vector<CandidateSet> enumerate_candidates(const ResponseStack& rs,
                                               const PartTreeModel& m,
                                               const BlobMask& mask, double thresh2,
                                               int top_n, const Detection& baseline);

// Extra seed positions (e.g. an alternative backtrack) merged into the sets.
void add_detection_candidates(std::vector<CandidateSet>& sets, const Detection& det,
                              const ResponseStack& rs, const PartTreeModel& m,
                              const BlobMask& mask);

// Labels of sibling pairs whose boxes overlap by more than thresh1 of the
// smaller box.
std::vector<std::string> detect_double_counts(const Detection& d,
                                              const PartTreeModel& m, double thresh1);

// The multi-cue configuration score: appearance and pairwise terms weighted
// by box/blob overlap ratios, plus unweighted type priors.
double score_config(const Detection& d, const PartTreeModel& m,
                    const ResponseStack& rs, const BlobMask& mask);

// Exhaustive search over the candidate product restricted to flagged pairs
// and the tree paths between them (everything else frozen at the baseline),
// followed by coordinate-ascent sweeps to a fixed point. Falls back to pure
// coordinate ascent when the product exceeds 1e6, flagging the detection.
Detection optimize_global(const std::vector<CandidateSet>& candidates,
                          const PartTreeModel& m, const ResponseStack& rs,
                          const BlobMask& mask,
                          const std::vector<std::string>& flagged_pairs,
                          const Detection& baseline);

}  // namespace partforest
