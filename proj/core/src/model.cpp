#include "partforest/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "binary_io.hpp"
#include "partforest/error.hpp"
#include "partforest/rng.hpp"

namespace partforest {

void PartTreeModel::validate() const {
    const int k = part_count();
    if (k < 1) throw DataError("model has no parts");
    int roots = 0;
    for (int i = 0; i < k; ++i) {
        const PartSpec& p = parts[i];
        if (p.part_id != i) throw DataError("parts must be stored in id order");
        if (p.parent < 0) {
            ++roots;
        } else if (p.parent >= i) {
            throw DataError("parent of part " + std::to_string(i) +
                            " does not precede it (not topological order)");
        }
        if (p.n_types < 1) throw DataError("part has no types");
    }
    if (roots != 1) throw DataError("model must have exactly one root");
    if (types.size() != static_cast<std::size_t>(k)) return;  // skeleton only
    for (int i = 0; i < k; ++i) {
        if (static_cast<int>(types[i].size()) != parts[i].n_types)
            throw DataError("type count mismatch for part " + std::to_string(i));
        for (const PartType& t : types[i])
            if (static_cast<int>(t.filter.size()) != feature_len(i))
                throw DataError("filter length mismatch for part " + std::to_string(i));
    }
}

PartTreeModel make_default_skeleton(const FeatureConfig& fc, int template_cells) {
    PartTreeModel m;
    m.feature_config = fc;
    m.parts.resize(kNumJoints2d);
    for (int i = 0; i < kNumJoints2d; ++i) {
        PartSpec& p = m.parts[i];
        p.part_id = i;
        p.parent = kJointParent[i];
        p.n_types = default_type_count(i);
        p.template_w = template_cells;
        p.template_h = template_cells;
        p.name = joint_names_2d()[i];
    }
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// type clustering
// ---------------------------------------------------------------------------

namespace {

double sq_dist(const Offset2d& a, const Offset2d& b) {
    const double dx = a.dx - b.dx, dy = a.dy - b.dy;
    return dx * dx + dy * dy;
}

double lloyd_once(const std::vector<Offset2d>& pts, int k, Rng& rng,
                  std::vector<int>& labels, std::vector<Offset2d>& centroids) {
    const int n = static_cast<int>(pts.size());
    // Forgy init from distinct sample indices.
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = 0; i < k; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(order[i], order[j]);
    }
    centroids.resize(k);
    for (int c = 0; c < k; ++c) centroids[c] = pts[order[c]];

    labels.assign(n, 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = sq_dist(pts[i], centroids[0]);
            for (int c = 1; c < k; ++c) {
                const double d = sq_dist(pts[i], centroids[c]);
                if (d < best_d) {  // ties keep the lower index
                    best_d = d;
                    best = c;
                }
            }
            if (labels[i] != best) {
                labels[i] = best;
                changed = true;
            }
        }
        std::vector<Offset2d> sums(k);
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i) {
            sums[labels[i]].dx += pts[i].dx;
            sums[labels[i]].dy += pts[i].dy;
            ++counts[labels[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // Re-seed an empty cluster at the point farthest from its centroid.
                int far = 0;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    const double d = sq_dist(pts[i], centroids[labels[i]]);
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                centroids[c] = pts[far];
                labels[far] = c;
                changed = true;
            } else {
                centroids[c] = {sums[c].dx / counts[c], sums[c].dy / counts[c]};
            }
        }
        if (!changed && iter > 0) break;
    }
    double sse = 0.0;
    for (int i = 0; i < n; ++i) sse += sq_dist(pts[i], centroids[labels[i]]);
    return sse;
}

}  // namespace

ClusterResult cluster_part_types(const std::vector<Offset2d>& offsets, int n_types,
                                 std::uint64_t seed) {
    if (n_types < 1) throw ConfigError("n_types must be positive");
    if (static_cast<int>(offsets.size()) < n_types)
        throw ConfigError("need at least n_types offset samples to cluster");

    Rng rng(seed);
    ClusterResult best;
    double best_sse = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < 10; ++restart) {
        std::vector<int> labels;
        std::vector<Offset2d> centroids;
        const double sse = lloyd_once(offsets, n_types, rng, labels, centroids);
        if (sse < best_sse) {
            best_sse = sse;
            best.labels = std::move(labels);
            best.centroids = std::move(centroids);
        }
    }
    // Stable ordering: sort clusters by (dx, dy) so type ids do not depend on
    // the restart that won.
    std::vector<int> perm(n_types);
    for (int i = 0; i < n_types; ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(), [&](int a, int b) {
        const Offset2d& ca = best.centroids[a];
        const Offset2d& cb = best.centroids[b];
        if (ca.dx != cb.dx) return ca.dx < cb.dx;
        return ca.dy < cb.dy;
    });
    std::vector<int> inv(n_types);
    for (int i = 0; i < n_types; ++i) inv[perm[i]] = i;
    ClusterResult out;
    out.centroids.resize(n_types);
    for (int i = 0; i < n_types; ++i) out.centroids[inv[i]] = best.centroids[i];
    // Final assignment against the reordered centroids keeps the documented
    // contract: nearest centroid, ties to the lowest index.
    out.labels.resize(offsets.size());
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        int bestc = 0;
        double best_d = sq_dist(offsets[i], out.centroids[0]);
        for (int c = 1; c < n_types; ++c) {
            const double d = sq_dist(offsets[i], out.centroids[c]);
            if (d < best_d) {
                best_d = d;
                bestc = c;
            }
        }
        out.labels[i] = bestc;
    }
    return out;
}

// ---------------------------------------------------------------------------
// template fitting
// ---------------------------------------------------------------------------

TemplateFit fit_templates(const std::vector<std::vector<double>>& positives,
                          const std::vector<std::vector<double>>& negatives,
                          double ridge_lambda) {
    if (positives.empty()) throw DataError("fit_templates needs at least 1 positive");
    if (negatives.empty()) throw DataError("fit_templates needs negatives");
    const int d = static_cast<int>(positives[0].size());
    const int n = static_cast<int>(positives.size() + negatives.size());

    Eigen::MatrixXd a(n, d + 1);
    Eigen::VectorXd y(n);
    int row = 0;
    for (const auto& x : positives) {
        if (static_cast<int>(x.size()) != d) throw ShapeError("inconsistent feature length");
        for (int j = 0; j < d; ++j) a(row, j) = x[j];
        a(row, d) = 1.0;
        y(row++) = 1.0;
    }
    for (const auto& x : negatives) {
        if (static_cast<int>(x.size()) != d) throw ShapeError("inconsistent feature length");
        for (int j = 0; j < d; ++j) a(row, j) = x[j];
        a(row, d) = 1.0;
        y(row++) = -1.0;
    }

    Eigen::MatrixXd gram = a.transpose() * a;
    for (int j = 0; j < d; ++j) gram(j, j) += ridge_lambda;  // intercept unpenalized
    const Eigen::VectorXd rhs = a.transpose() * y;

    Eigen::VectorXd theta;
    if (ridge_lambda > 0.0) {
        theta = gram.ldlt().solve(rhs);
    } else {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
        lu.setThreshold(1e-10);
        if (lu.rank() < d + 1)
            throw NumericalError("singular template system; use ridge_lambda > 0");
        theta = lu.solve(rhs);
    }
    TemplateFit fit;
    fit.filter.assign(theta.data(), theta.data() + d);
    fit.bias = theta(d);
    return fit;
}

// ---------------------------------------------------------------------------
// pairwise fitting
// ---------------------------------------------------------------------------

namespace {

constexpr double kMinCurvature = 1e-3;  // |w2| lower bound
constexpr double kMaxCurvature = 50.0;  // |w2| at degenerate variance

DeformWeights gaussian_to_weights(double mu_x, double var_x, double mu_y, double var_y) {
    DeformWeights w;
    const double cx = std::clamp(1.0 / (2.0 * std::max(var_x, 1e-300)), kMinCurvature,
                                 kMaxCurvature);
    const double cy = std::clamp(1.0 / (2.0 * std::max(var_y, 1e-300)), kMinCurvature,
                                 kMaxCurvature);
    w.w_dx2 = -cx;
    w.w_dy2 = -cy;
    w.w_dx = 2.0 * cx * mu_x;
    w.w_dy = 2.0 * cy * mu_y;
    return w;
}

struct Moments {
    double mu_x = 0, var_x = 0, mu_y = 0, var_y = 0;
    int n = 0;
};

Moments moments_of(const std::vector<Offset2d>& pts) {
    Moments m;
    m.n = static_cast<int>(pts.size());
    if (m.n == 0) return m;
    for (const auto& p : pts) {
        m.mu_x += p.dx;
        m.mu_y += p.dy;
    }
    m.mu_x /= m.n;
    m.mu_y /= m.n;
    for (const auto& p : pts) {
        m.var_x += (p.dx - m.mu_x) * (p.dx - m.mu_x);
        m.var_y += (p.dy - m.mu_y) * (p.dy - m.mu_y);
    }
    m.var_x /= m.n;
    m.var_y /= m.n;
    return m;
}

}  // namespace

PairwiseParams fit_pairwise(const PairwiseSamples& samples) {
    const int tc = static_cast<int>(samples.offsets.size());
    if (tc == 0) throw DataError("fit_pairwise needs at least one child type");
    const int tp = static_cast<int>(samples.offsets[0].size());
    if (tp == 0) throw DataError("fit_pairwise needs at least one parent type");

    // Pooled fallback over all pairs for never-seen combinations.
    std::vector<Offset2d> pooled;
    std::vector<int> child_count(tc, 0);
    for (int a = 0; a < tc; ++a)
        for (int b = 0; b < tp; ++b) {
            const auto& pts = samples.offsets[a][b];
            pooled.insert(pooled.end(), pts.begin(), pts.end());
            child_count[a] += static_cast<int>(pts.size());
        }
    if (pooled.empty()) throw DataError("fit_pairwise got no offset samples");
    const Moments pooled_m = moments_of(pooled);
    const DeformWeights pooled_w =
        gaussian_to_weights(pooled_m.mu_x, pooled_m.var_x, pooled_m.mu_y, pooled_m.var_y);

    PairwiseParams out;
    out.co_occurrence.assign(tc, std::vector<double>(tp, 0.0));
    out.deform.assign(tc, std::vector<DeformWeights>(tp, pooled_w));
    for (int a = 0; a < tc; ++a) {
        for (int b = 0; b < tp; ++b) {
            const auto& pts = samples.offsets[a][b];
            // Laplace-smoothed log frequency of the parent type given the child.
            out.co_occurrence[a][b] = std::log(
                (static_cast<double>(pts.size()) + 1.0) / (child_count[a] + tp));
            if (!pts.empty()) {
                const Moments m = moments_of(pts);
                out.deform[a][b] = gaussian_to_weights(m.mu_x, m.var_x, m.mu_y, m.var_y);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

constexpr char kModelMagic[4] = {'P', 'F', 'M', '1'};
constexpr std::uint32_t kModelVersion = 1;

using detail::BinaryReader;
using detail::BinaryWriter;

}  // namespace

void save_model(const PartTreeModel& m, const std::string& path) {
    m.validate();
    BinaryWriter w(path);
    w.bytes(kModelMagic, 4);
    w.u32(kModelVersion);
    w.u32(static_cast<std::uint32_t>(m.part_count()));
    w.u32(static_cast<std::uint32_t>(m.feature_config.cell_size));
    w.u32(static_cast<std::uint32_t>(m.feature_config.n_orientations));
    for (const PartSpec& p : m.parts) {
        w.i32(p.part_id);
        w.i32(p.parent);
        w.u32(static_cast<std::uint32_t>(p.n_types));
        w.u32(static_cast<std::uint32_t>(p.template_w));
        w.u32(static_cast<std::uint32_t>(p.template_h));
        w.str(p.name);
    }
    for (int i = 0; i < m.part_count(); ++i) {
        for (const PartType& t : m.types[i]) {
            w.u32(static_cast<std::uint32_t>(t.filter.size()));
            w.bytes(t.filter.data(), t.filter.size() * sizeof(double));
            w.f64(t.bias);
            w.f64(t.anchor_dx);
            w.f64(t.anchor_dy);
        }
    }
    for (int i = 0; i < m.part_count(); ++i) {
        if (m.parts[i].parent < 0) continue;
        const PairwiseParams& pw = m.pairwise[i];
        const auto rows = static_cast<std::uint32_t>(pw.co_occurrence.size());
        const auto cols = static_cast<std::uint32_t>(pw.co_occurrence[0].size());
        w.u32(rows);
        w.u32(cols);
        for (const auto& r : pw.co_occurrence)
            for (double v : r) w.f64(v);
        for (const auto& r : pw.deform)
            for (const DeformWeights& d : r) {
                w.f64(d.w_dx);
                w.f64(d.w_dx2);
                w.f64(d.w_dy);
                w.f64(d.w_dy2);
            }
    }
}

PartTreeModel load_model(const std::string& path) {
    BinaryReader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kModelMagic, 4) != 0)
        throw FormatError("bad magic in model file " + path, 0);
    const std::uint32_t version = r.u32();
    if (version != kModelVersion)
        throw DataError("unsupported model version " + std::to_string(version) +
                        " in " + path);
    PartTreeModel m;
    m.version = version;
    const std::uint32_t k = r.u32();
    if (k == 0 || k > 4096) throw FormatError("implausible part count in " + path, r.offset() - 4);
    m.feature_config.cell_size = static_cast<int>(r.u32());
    m.feature_config.n_orientations = static_cast<int>(r.u32());
    m.parts.resize(k);
    for (std::uint32_t i = 0; i < k; ++i) {
        PartSpec& p = m.parts[i];
        p.part_id = r.i32();
        p.parent = r.i32();
        p.n_types = static_cast<int>(r.u32());
        p.template_w = static_cast<int>(r.u32());
        p.template_h = static_cast<int>(r.u32());
        p.name = r.str();
    }
    m.types.resize(k);
    for (std::uint32_t i = 0; i < k; ++i) {
        m.types[i].resize(m.parts[i].n_types);
        for (PartType& t : m.types[i]) {
            const std::uint32_t len = r.u32();
            if (len != static_cast<std::uint32_t>(m.feature_len(static_cast<int>(i))))
                throw FormatError("filter length mismatch in " + path, r.offset() - 4);
            t.filter.resize(len);
            r.bytes(t.filter.data(), len * sizeof(double));
            t.bias = r.f64();
            t.anchor_dx = r.f64();
            t.anchor_dy = r.f64();
        }
    }
    m.pairwise.resize(k);
    for (std::uint32_t i = 0; i < k; ++i) {
        if (m.parts[i].parent < 0) continue;
        PairwiseParams& pw = m.pairwise[i];
        const std::uint32_t rows = r.u32();
        const std::uint32_t cols = r.u32();
        if (rows != static_cast<std::uint32_t>(m.parts[i].n_types) ||
            cols != static_cast<std::uint32_t>(m.parts[m.parts[i].parent].n_types))
            throw FormatError("pairwise table shape mismatch in " + path, r.offset() - 8);
        pw.co_occurrence.assign(rows, std::vector<double>(cols));
        for (auto& row : pw.co_occurrence)
            for (double& v : row) v = r.f64();
        pw.deform.assign(rows, std::vector<DeformWeights>(cols));
        for (auto& row : pw.deform)
            for (DeformWeights& d : row) {
                d.w_dx = r.f64();
                d.w_dx2 = r.f64();
                d.w_dy = r.f64();
                d.w_dy2 = r.f64();
            }
    }
    m.validate();
    return m;
}

}  // namespace partforest
