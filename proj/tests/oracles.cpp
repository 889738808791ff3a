#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "partforest/rng.hpp"

using namespace partforest;

namespace oracle {

DistanceTransformResult brute_distance_transform(const ImageGrid& score,
                                                 const DeformWeights& deform,
                                                 double anchor_dx, double anchor_dy) {
    DistanceTransformResult out;
    out.transformed = ImageGrid(score.width, score.height);
    out.argmax_x.assign(score.size(), 0);
    out.argmax_y.assign(score.size(), 0);
    for (int qy = 0; qy < score.height; ++qy) {
        for (int qx = 0; qx < score.width; ++qx) {
            double best = -std::numeric_limits<double>::infinity();
            int bx = 0, by = 0;
            for (int py = 0; py < score.height; ++py) {
                const double dy = py - qy - anchor_dy;
                const double fy = deform_score_1d(deform.w_dy, deform.w_dy2, dy);
                for (int px = 0; px < score.width; ++px) {
                    const double dx = px - qx - anchor_dx;
                    const double v =
                        (score.at(px, py) +
                         deform_score_1d(deform.w_dx, deform.w_dx2, dx)) + fy;
                    if (v > best) {
                        best = v;
                        bx = px;
                        by = py;
                    }
                }
            }
            const std::size_t i = static_cast<std::size_t>(qy) * score.width + qx;
            out.transformed.data[i] = best;
            out.argmax_x[i] = bx;
            out.argmax_y[i] = by;
        }
    }
    return out;
}

namespace {

// Gated unary maps, materialized once so enumeration stays cheap.
std::vector<std::vector<ImageGrid>> gated_maps(const ResponseStack& rs,
                                               const PartTreeModel& m,
                                               const BlobMask* mask, bool gate,
                                               double thresh2) {
    std::vector<std::vector<ImageGrid>> maps = rs.maps;
    if (!gate) return maps;
    for (int part = 0; part < m.part_count(); ++part)
        for (int cy = 0; cy < rs.cells_y; ++cy)
            for (int cx = 0; cx < rs.cells_x; ++cx)
                if (overlap_ratio(*mask, part_box(m, part, cx, cy)) < thresh2)
                    for (auto& grid : maps[part]) grid.at(cx, cy) = kScoreSentinel;
    return maps;
}

double config_score_on(const std::vector<std::vector<ImageGrid>>& unary,
                       const PartTreeModel& m,
                       const std::vector<PartPlacement>& parts) {
    double total = 0.0;
    for (int i = 0; i < m.part_count(); ++i)
        total += unary[i][parts[i].type].at(parts[i].cx, parts[i].cy);
    for (int child = 1; child < m.part_count(); ++child) {
        const int parent = m.parts[child].parent;
        const PartType& ct = m.types[child][parts[child].type];
        const DeformWeights& dw =
            m.pairwise[child].deform[parts[child].type][parts[parent].type];
        const double dx = parts[child].cx - parts[parent].cx - ct.anchor_dx;
        const double dy = parts[child].cy - parts[parent].cy - ct.anchor_dy;
        total += deform_score_1d(dw.w_dx, dw.w_dx2, dx) +
                 deform_score_1d(dw.w_dy, dw.w_dy2, dy) +
                 m.pairwise[child].co_occurrence[parts[child].type][parts[parent].type];
    }
    return total;
}

}  // namespace

double tree_config_score(const ResponseStack& rs, const PartTreeModel& m,
                         const std::vector<PartPlacement>& parts, const BlobMask* mask,
                         bool gate, double thresh2) {
    return config_score_on(gated_maps(rs, m, mask, gate, thresh2), m, parts);
}

BruteTreeResult brute_tree_max(const ResponseStack& rs, const PartTreeModel& m,
                               const BlobMask* mask, bool gate, double thresh2) {
    const auto unary = gated_maps(rs, m, mask, gate, thresh2);
    const int k = m.part_count();
    const int cells = rs.cells_x * rs.cells_y;
    std::vector<int> states(k);
    for (int i = 0; i < k; ++i) states[i] = cells * m.parts[i].n_types;

    BruteTreeResult best;
    best.score = -std::numeric_limits<double>::infinity();
    std::vector<PartPlacement> parts(k);
    std::vector<int> idx(k, 0);
    while (true) {
        for (int i = 0; i < k; ++i) {
            const int cell = idx[i] % cells;
            parts[i] = {i, cell % rs.cells_x, cell / rs.cells_x, idx[i] / cells};
        }
        const double s = config_score_on(unary, m, parts);
        if (s > best.score) {
            best.score = s;
            best.parts = parts;
        }
        int carry = k - 1;
        while (carry >= 0 && ++idx[carry] == states[carry]) idx[carry--] = 0;
        if (carry < 0) break;
    }
    return best;
}

std::vector<int> label_components(const BlobMask& mask) {
    const int n = static_cast<int>(mask.bits.size());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    auto unite = [&](int a, int b) { parent[find(a)] = find(b); };

    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y)) continue;
            const int i = y * mask.width + x;
            if (x > 0 && mask.at(x - 1, y)) unite(i, i - 1);
            if (y > 0 && mask.at(x, y - 1)) unite(i, i - mask.width);
        }
    std::vector<int> labels(n, 0);
    int next = 0;
    std::vector<int> seen(n, -1);
    for (int i = 0; i < n; ++i) {
        if (!mask.bits[i]) continue;
        const int root = find(i);
        if (seen[root] < 0) seen[root] = ++next;
        labels[i] = seen[root];
    }
    return labels;
}

BlobMask filter_small_components(const BlobMask& mask, int min_area) {
    const std::vector<int> labels = label_components(mask);
    std::vector<int> area;
    for (const int l : labels)
        if (l > 0) {
            if (static_cast<int>(area.size()) < l) area.resize(l, 0);
            ++area[l - 1];
        }
    BlobMask out = mask;
    for (std::size_t i = 0; i < mask.bits.size(); ++i)
        if (labels[i] > 0 && area[labels[i] - 1] < min_area) out.bits[i] = 0;
    return out;
}

std::vector<RootPeak> brute_nms(const ImageGrid& map, double min_score, int radius) {
    std::vector<char> alive(map.size(), 1);
    std::vector<RootPeak> peaks;
    const long r2 = static_cast<long>(radius) * radius;
    while (true) {
        int best = -1;
        for (int i = 0; i < static_cast<int>(map.size()); ++i) {
            if (!alive[i] || map.data[i] <= min_score) continue;
            if (best < 0 || map.data[i] > map.data[best]) best = i;
        }
        if (best < 0) break;
        const int bx = best % map.width, by = best / map.width;
        peaks.push_back({bx, by, map.data[best]});
        for (int y = 0; y < map.height; ++y)
            for (int x = 0; x < map.width; ++x) {
                const long dx = x - bx, dy = y - by;
                if (dx * dx + dy * dy <= r2) alive[y * map.width + x] = 0;
            }
    }
    return peaks;
}

Eigen::Vector3d lml_fd_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                const SeHyperparams& h, double eps) {
    Eigen::Vector3d grad;
    for (int i = 0; i < 3; ++i) {
        SeHyperparams hp = h, hm = h;
        double* fields_p[3] = {&hp.log_signal_variance, &hp.log_length_scale,
                               &hp.log_noise_variance};
        double* fields_m[3] = {&hm.log_signal_variance, &hm.log_length_scale,
                               &hm.log_noise_variance};
        *fields_p[i] += eps;
        *fields_m[i] -= eps;
        const double fp = log_marginal_likelihood(x, y, hp).value;
        const double fm = log_marginal_likelihood(x, y, hm).value;
        grad(i) = (fp - fm) / (2.0 * eps);
    }
    return grad;
}

DensePosterior dense_gp_predict(const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y_raw,
                                const SeHyperparams& h,
                                const Eigen::RowVectorXd& x_star_raw) {
    const Eigen::RowVectorXd mean_in = x_raw.colwise().mean();
    const Eigen::MatrixXd x = x_raw.rowwise() - mean_in;
    const double mean_y = y_raw.mean();
    const Eigen::VectorXd y = y_raw.array() - mean_y;
    const Eigen::RowVectorXd xs = x_star_raw - mean_in;

    const long n = x.rows();
    Eigen::MatrixXd kmat(n, n);
    Eigen::VectorXd ks(n);
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < n; ++j) kmat(i, j) = se_kernel(x.row(i), x.row(j), h);
        kmat(i, i) += h.noise_variance();
        ks(i) = se_kernel(xs, x.row(i), h);
    }
    const Eigen::MatrixXd kinv = kmat.fullPivLu().inverse();
    DensePosterior out;
    out.mean = ks.dot(kinv * y) + mean_y;
    out.variance = se_kernel(xs, xs, h) + h.noise_variance() - ks.dot(kinv * ks);
    return out;
}

double dense_gp_posterior_cov(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                              const SeHyperparams& h, const Eigen::RowVectorXd& a,
                              const Eigen::RowVectorXd& b) {
    const long n = x.rows();
    Eigen::MatrixXd kmat(n, n);
    Eigen::VectorXd ka(n), kb(n);
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < n; ++j) kmat(i, j) = se_kernel(x.row(i), x.row(j), h);
        kmat(i, i) += h.noise_variance();
        ka(i) = se_kernel(a, x.row(i), h);
        kb(i) = se_kernel(b, x.row(i), h);
    }
    (void)y;
    const Eigen::MatrixXd kinv = kmat.fullPivLu().inverse();
    return se_kernel(a, b, h) - ka.dot(kinv * kb);
}

TwoPartition best_two_partition(const std::vector<Offset2d>& pts) {
    const int n = static_cast<int>(pts.size());
    TwoPartition best;
    best.sse = std::numeric_limits<double>::infinity();
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
        double sx[2] = {0, 0}, sy[2] = {0, 0};
        int cnt[2] = {0, 0};
        for (int i = 0; i < n; ++i) {
            const int c = (bits >> i) & 1;
            sx[c] += pts[i].dx;
            sy[c] += pts[i].dy;
            ++cnt[c];
        }
        if (cnt[0] == 0 || cnt[1] == 0) continue;
        double sse = 0.0;
        for (int i = 0; i < n; ++i) {
            const int c = (bits >> i) & 1;
            const double dx = pts[i].dx - sx[c] / cnt[c];
            const double dy = pts[i].dy - sy[c] / cnt[c];
            sse += dx * dx + dy * dy;
        }
        if (sse < best.sse) {
            best.sse = sse;
            best.labels.assign(n, 0);
            for (int i = 0; i < n; ++i) best.labels[i] = (bits >> i) & 1;
        }
    }
    return best;
}

RandomTreeInstance random_tree_instance(std::uint64_t seed, int max_parts,
                                        int max_types, int max_cells_total) {
    Rng rng(seed);
    RandomTreeInstance inst;
    const int k = rng.uniform_int(1, max_parts);

    // Bound the exhaustive enumeration cost: (cells * types)^k <= 4e6.
    int w, h, types;
    while (true) {
        w = rng.uniform_int(2, 5);
        h = rng.uniform_int(2, 5);
        types = rng.uniform_int(1, max_types);
        if (w * h > max_cells_total) continue;
        if (std::pow(static_cast<double>(w) * h * types, k) <= 2e6) break;
    }

    PartTreeModel& m = inst.model;
    m.feature_config = FeatureConfig{8, 9};
    m.parts.resize(k);
    m.types.resize(k);
    m.pairwise.resize(k);
    for (int i = 0; i < k; ++i) {
        PartSpec& p = m.parts[i];
        p.part_id = i;
        p.parent = i == 0 ? -1 : rng.uniform_int(0, i - 1);
        p.n_types = types;
        p.template_w = 1;
        p.template_h = 1;
        p.name = "part_" + std::to_string(i);
        m.types[i].resize(types);
        for (PartType& t : m.types[i]) {
            t.filter.assign(static_cast<std::size_t>(m.feature_config.n_orientations), 0.0);
            t.bias = 0.0;
            t.anchor_dx = rng.uniform(-1.5, 1.5);
            t.anchor_dy = rng.uniform(-1.5, 1.5);
        }
    }
    for (int i = 1; i < k; ++i) {
        const int tp = m.parts[m.parts[i].parent].n_types;
        m.pairwise[i].co_occurrence.assign(types, std::vector<double>(tp));
        m.pairwise[i].deform.assign(types, std::vector<DeformWeights>(tp));
        for (int a = 0; a < types; ++a)
            for (int b = 0; b < tp; ++b) {
                m.pairwise[i].co_occurrence[a][b] = rng.uniform(-1.0, 1.0);
                DeformWeights& d = m.pairwise[i].deform[a][b];
                d.w_dx = rng.uniform(-0.5, 0.5);
                d.w_dy = rng.uniform(-0.5, 0.5);
                d.w_dx2 = -rng.uniform(0.05, 2.0);
                d.w_dy2 = -rng.uniform(0.05, 2.0);
            }
    }

    ResponseStack& rs = inst.responses;
    rs.cells_x = w;
    rs.cells_y = h;
    rs.cell_size = m.feature_config.cell_size;
    rs.maps.resize(k);
    for (int i = 0; i < k; ++i)
        for (int t = 0; t < types; ++t) {
            ImageGrid g(w, h);
            for (double& v : g.data) v = rng.uniform(-2.0, 2.0);
            rs.maps[i].push_back(std::move(g));
        }
    return inst;
}

}  // namespace oracle
