#include "partforest/infer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "partforest/error.hpp"

namespace partforest {

// ---------------------------------------------------------------------------
// unary responses
// ---------------------------------------------------------------------------

ResponseStack part_responses(const FeatureMap& fm, const PartTreeModel& m) {
    m.validate();
    if (m.types.empty()) throw DataError("model has no trained types");
    if (fm.channels != m.feature_config.n_orientations ||
        fm.cell_size != m.feature_config.cell_size)
        throw ShapeError("feature map configuration does not match model");

    ResponseStack rs;
    rs.cells_x = fm.cells_x;
    rs.cells_y = fm.cells_y;
    rs.cell_size = fm.cell_size;
    rs.maps.resize(m.part_count());

    for (int part = 0; part < m.part_count(); ++part) {
        const int tw = m.parts[part].template_w;
        const int th = m.parts[part].template_h;
        if (tw > fm.cells_x || th > fm.cells_y)
            throw ShapeError("template larger than feature map");
        rs.maps[part].reserve(m.parts[part].n_types);
        for (const PartType& type : m.types[part]) {
            ImageGrid grid(fm.cells_x, fm.cells_y, kScoreSentinel);
            Eigen::Map<const Eigen::VectorXd> w(type.filter.data(),
                                                static_cast<long>(type.filter.size()));
            for (int cy = 0; cy + th <= fm.cells_y; ++cy) {
                for (int cx = 0; cx + tw <= fm.cells_x; ++cx) {
                    double dot = 0.0;
                    std::size_t k = 0;
                    for (int dy = 0; dy < th; ++dy) {
                        const double* row = &fm.data[(static_cast<std::size_t>(cy + dy) *
                                                          fm.cells_x + cx) * fm.channels];
                        for (int j = 0; j < tw * fm.channels; ++j) dot += w(k++) * row[j];
                    }
                    grid.at(cx, cy) = dot + type.bias;
                }
            }
            rs.maps[part].push_back(std::move(grid));
        }
    }
    return rs;
}

// ---------------------------------------------------------------------------
// generalized distance transform
// ---------------------------------------------------------------------------

namespace {

// Lower-envelope pass for the max of equal-curvature concave parabolas.
// out(q) = max_p src(p) + w1*d + w2*d^2 with d = p - q - anchor.
void dt_1d(const double* src, int src_stride, int n, double w1, double w2,
           double anchor, double* dst, int dst_stride, int* arg, int arg_stride) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<int> v(n);
    std::vector<double> z(n + 1);
    auto val = [&](int p) { return src[static_cast<std::size_t>(p) * src_stride]; };
    // Intersection of the parabolas rooted at p < r; r dominates to the right.
    // The midpoint form keeps equal-value symmetric ties exact, so tie
    // breaking to the lower index survives floating point.
    auto intersect = [&](int p, int r) {
        return 0.5 * (p + r) + (w1 + (val(r) - val(p)) / (r - p)) / (2.0 * w2);
    };

    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        double s = intersect(v[k], q);
        while (k > 0 && s <= z[k]) {
            --k;
            s = intersect(v[k], q);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }

    k = 0;
    for (int q = 0; q < n; ++q) {
        const double u = q + anchor;
        while (z[k + 1] < u) ++k;
        const int p = v[k];
        const double d = p - u;
        dst[static_cast<std::size_t>(q) * dst_stride] = val(p) + deform_score_1d(w1, w2, d);
        arg[static_cast<std::size_t>(q) * arg_stride] = p;
    }
}

}  // namespace

DistanceTransformResult distance_transform(const ImageGrid& score,
                                           const DeformWeights& deform,
                                           double anchor_dx, double anchor_dy) {
    if (!(deform.w_dx2 < 0.0) || !(deform.w_dy2 < 0.0))
        throw ConfigError("deformation must be strictly concave (w_dx2, w_dy2 < 0)");
    const int w = score.width, h = score.height;

    DistanceTransformResult out;
    out.transformed = ImageGrid(w, h);
    out.argmax_x.assign(static_cast<std::size_t>(w) * h, 0);
    out.argmax_y.assign(static_cast<std::size_t>(w) * h, 0);

    // Pass over x within each row, then over y within each column.
    ImageGrid tmp(w, h);
    std::vector<int> arg_x1(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        dt_1d(&score.data[static_cast<std::size_t>(y) * w], 1, w, deform.w_dx,
              deform.w_dx2, anchor_dx, &tmp.data[static_cast<std::size_t>(y) * w], 1,
              &arg_x1[static_cast<std::size_t>(y) * w], 1);

    std::vector<int> arg_y2(static_cast<std::size_t>(w) * h);
    for (int x = 0; x < w; ++x)
        dt_1d(&tmp.data[x], w, h, deform.w_dy, deform.w_dy2, anchor_dy,
              &out.transformed.data[x], w, &arg_y2[x], w);

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const int py = arg_y2[i];
            out.argmax_y[i] = py;
            out.argmax_x[i] = arg_x1[static_cast<std::size_t>(py) * w + x];
        }
    return out;
}

// ---------------------------------------------------------------------------
// message passing
// ---------------------------------------------------------------------------

BoundingBox part_box(const PartTreeModel& m, int part, int cx, int cy) {
    const int cs = m.feature_config.cell_size;
    return BoundingBox{cx * cs, cy * cs, m.parts[part].template_w * cs,
                       m.parts[part].template_h * cs};
}

double placement_x_px(const PartTreeModel& m, const PartPlacement& p) {
    return (p.cx + m.parts[p.part_id].template_w / 2.0) * m.feature_config.cell_size;
}

double placement_y_px(const PartTreeModel& m, const PartPlacement& p) {
    return (p.cy + m.parts[p.part_id].template_h / 2.0) * m.feature_config.cell_size;
}

namespace {

std::vector<ImageGrid> gated_scores(const ResponseStack& rs, const PartTreeModel& m,
                                    int part, const MaskIntegral* integral,
                                    double thresh2) {
    std::vector<ImageGrid> scores = rs.maps[part];
    if (!integral) return scores;
    const int w = rs.cells_x, h = rs.cells_y;
    std::vector<char> keep(static_cast<std::size_t>(w) * h, 0);
    for (int cy = 0; cy < h; ++cy)
        for (int cx = 0; cx < w; ++cx)
            keep[static_cast<std::size_t>(cy) * w + cx] =
                integral->overlap_ratio(part_box(m, part, cx, cy)) >= thresh2 ? 1 : 0;
    for (ImageGrid& g : scores)
        for (std::size_t i = 0; i < g.data.size(); ++i)
            if (!keep[i]) g.data[i] = kScoreSentinel;
    return scores;
}

}  // namespace

RootScore pass_messages(const ResponseStack& rs, const PartTreeModel& m,
                        const BlobMask* mask, bool gate, double thresh2) {
    m.validate();
    if (gate && mask == nullptr)
        throw ConfigError("pass_messages: gating requested without a mask");
    const int k = m.part_count();
    const int w = rs.cells_x, h = rs.cells_y;
    const std::size_t cells = static_cast<std::size_t>(w) * h;

    std::optional<MaskIntegral> integral;
    if (gate) integral.emplace(*mask);

    RootScore out;
    out.tables.cells_x = w;
    out.tables.cells_y = h;
    out.tables.edges.resize(k);

    // Subtree scores per part and type; children accumulate onto parents.
    std::vector<std::vector<ImageGrid>> score(k);
    for (int part = 0; part < k; ++part)
        score[part] = gated_scores(rs, m, part, gate ? &*integral : nullptr, thresh2);

    // Children always carry a larger index than their parent, so a reverse
    // sweep visits every subtree before its root.
    for (int child = k - 1; child >= 1; --child) {
        const int parent = m.parts[child].parent;
        const int tc_n = m.parts[child].n_types;
        const int tp_n = m.parts[parent].n_types;
        const PairwiseParams& pw = m.pairwise[child];

        EdgeTables& et = out.tables.edges[child];
        et.n_child_types = tc_n;
        et.n_parent_types = tp_n;
        et.arg_x.assign(static_cast<std::size_t>(tc_n) * tp_n, {});
        et.arg_y.assign(static_cast<std::size_t>(tc_n) * tp_n, {});
        et.best_child_type.assign(tp_n, std::vector<int>(cells, 0));

        std::vector<DistanceTransformResult> transformed(
            static_cast<std::size_t>(tc_n) * tp_n);
        for (int tc = 0; tc < tc_n; ++tc) {
            const PartType& ct = m.types[child][tc];
            for (int tp = 0; tp < tp_n; ++tp) {
                const std::size_t pair = static_cast<std::size_t>(tc) * tp_n + tp;
                transformed[pair] = distance_transform(score[child][tc],
                                                       pw.deform[tc][tp],
                                                       ct.anchor_dx, ct.anchor_dy);
                et.arg_x[pair] = std::move(transformed[pair].argmax_x);
                et.arg_y[pair] = std::move(transformed[pair].argmax_y);
            }
        }
        for (int tp = 0; tp < tp_n; ++tp) {
            ImageGrid& acc = score[parent][tp];
            std::vector<int>& best_tc = et.best_child_type[tp];
            for (std::size_t i = 0; i < cells; ++i) {
                int arg = 0;
                double best = transformed[static_cast<std::size_t>(0) * tp_n + tp]
                                  .transformed.data[i] +
                              pw.co_occurrence[0][tp];
                for (int tc = 1; tc < tc_n; ++tc) {
                    const double v =
                        transformed[static_cast<std::size_t>(tc) * tp_n + tp]
                            .transformed.data[i] +
                        pw.co_occurrence[tc][tp];
                    if (v > best) {
                        best = v;
                        arg = tc;
                    }
                }
                best_tc[i] = arg;
                acc.data[i] += best;
            }
        }
    }

    out.map = ImageGrid(w, h);
    out.tables.root_best_type.assign(cells, 0);
    const int tr_n = m.parts[0].n_types;
    for (std::size_t i = 0; i < cells; ++i) {
        int arg = 0;
        double best = score[0][0].data[i];
        for (int tr = 1; tr < tr_n; ++tr) {
            if (score[0][tr].data[i] > best) {
                best = score[0][tr].data[i];
                arg = tr;
            }
        }
        out.map.data[i] = best;
        out.tables.root_best_type[i] = arg;
    }
    return out;
}

// ---------------------------------------------------------------------------
// root finding and backtracking
// ---------------------------------------------------------------------------

std::vector<RootPeak> find_root(const ImageGrid& root_map, double min_score,
                                int nms_radius) {
    struct Entry {
        double score;
        int idx;
    };
    std::vector<Entry> entries;
    entries.reserve(root_map.size());
    for (int i = 0; i < static_cast<int>(root_map.size()); ++i)
        if (root_map.data[i] > min_score) entries.push_back({root_map.data[i], i});
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.idx < b.idx;
    });

    std::vector<RootPeak> peaks;
    const long r2 = static_cast<long>(nms_radius) * nms_radius;
    for (const Entry& e : entries) {
        const int x = e.idx % root_map.width;
        const int y = e.idx / root_map.width;
        bool suppressed = false;
        for (const RootPeak& p : peaks) {
            const long dx = p.cx - x, dy = p.cy - y;
            if (dx * dx + dy * dy <= r2) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) peaks.push_back({x, y, e.score});
    }
    return peaks;
}

Detection backtrack(int root_cx, int root_cy, const RootScore& rs,
                    const PartTreeModel& m) {
    const int k = m.part_count();
    const int w = rs.map.width;
    Detection det;
    det.parts.resize(k);

    const std::size_t root_cell = static_cast<std::size_t>(root_cy) * w + root_cx;
    det.parts[0] = {0, root_cx, root_cy, rs.tables.root_best_type[root_cell]};
    det.root_score = rs.map.data[root_cell];

    for (int child = 1; child < k; ++child) {
        const int parent = m.parts[child].parent;
        const PartPlacement& pp = det.parts[parent];
        const EdgeTables& et = rs.tables.edges[child];
        const std::size_t pcell = static_cast<std::size_t>(pp.cy) * w + pp.cx;
        const int tc = et.best_child_type[pp.type][pcell];
        const std::size_t pair =
            static_cast<std::size_t>(tc) * et.n_parent_types + pp.type;
        det.parts[child] = {child, et.arg_x[pair][pcell], et.arg_y[pair][pcell], tc};
    }
    return det;
}

// ---------------------------------------------------------------------------
// candidates
// ---------------------------------------------------------------------------

namespace {

bool is_local_max(const ImageGrid& g, int x, int y) {
    const double v = g.at(x, y);
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = x + dx, ny = y + dy;
            if (g.in_bounds(nx, ny) && g.at(nx, ny) > v) return false;
        }
    return true;
}

Candidate make_candidate(const ResponseStack& rs, const PartTreeModel& m,
                         const MaskIntegral& integral, int part, int type, int cx,
                         int cy, bool is_baseline) {
    Candidate c;
    c.part_id = part;
    c.type = type;
    c.cx = cx;
    c.cy = cy;
    c.unary = rs.maps[part][type].at(cx, cy);
    c.blob_overlap = integral.overlap_ratio(part_box(m, part, cx, cy));
    c.is_baseline = is_baseline;
    return c;
}

}  // namespace

std::vector<CandidateSet> enumerate_candidates(const ResponseStack& rs,
                                               const PartTreeModel& m,
                                               const BlobMask& mask, double thresh2,
                                               int top_n, const Detection& baseline) {
    const MaskIntegral integral(mask);
    const int k = m.part_count();
    std::vector<CandidateSet> sets(k);

    for (int part = 0; part < k; ++part) {
        CandidateSet& set = sets[part];
        for (int type = 0; type < m.parts[part].n_types; ++type) {
            const ImageGrid& g = rs.maps[part][type];
            struct Peak {
                double score;
                int idx;
            };
            std::vector<Peak> peaks;
            for (int y = 0; y < g.height; ++y)
                for (int x = 0; x < g.width; ++x) {
                    const double v = g.at(x, y);
                    if (v <= kScoreSentinel * 0.5) continue;  // out-of-bounds anchor
                    if (!is_local_max(g, x, y)) continue;
                    if (integral.overlap_ratio(part_box(m, part, x, y)) < thresh2)
                        continue;
                    peaks.push_back({v, y * g.width + x});
                }
            std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.idx < b.idx;
            });
            const int take = std::min<int>(top_n, static_cast<int>(peaks.size()));
            for (int i = 0; i < take; ++i)
                set.candidates.push_back(make_candidate(rs, m, integral, part, type,
                                                        peaks[i].idx % g.width,
                                                        peaks[i].idx / g.width, false));
        }
        if (set.candidates.empty()) set.fallback_only = true;

        const PartPlacement& bp = baseline.parts[part];
        bool have_baseline = false;
        for (Candidate& c : set.candidates)
            if (c.type == bp.type && c.cx == bp.cx && c.cy == bp.cy) {
                c.is_baseline = true;
                have_baseline = true;
            }
        if (!have_baseline)
            set.candidates.push_back(
                make_candidate(rs, m, integral, part, bp.type, bp.cx, bp.cy, true));
    }
    return sets;
}

void add_detection_candidates(std::vector<CandidateSet>& sets, const Detection& det,
                              const ResponseStack& rs, const PartTreeModel& m,
                              const BlobMask& mask) {
    const MaskIntegral integral(mask);
    for (int part = 0; part < m.part_count(); ++part) {
        const PartPlacement& p = det.parts[part];
        bool present = false;
        for (const Candidate& c : sets[part].candidates)
            if (c.type == p.type && c.cx == p.cx && c.cy == p.cy) {
                present = true;
                break;
            }
        if (!present)
            sets[part].candidates.push_back(
                make_candidate(rs, m, integral, part, p.type, p.cx, p.cy, false));
    }
}

// ---------------------------------------------------------------------------
// double-count detection and the multi-cue score
// ---------------------------------------------------------------------------

namespace {

double box_intersection(const BoundingBox& a, const BoundingBox& b) {
    const int x0 = std::max(a.x, b.x), y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.x + a.w, b.x + b.w);
    const int y1 = std::min(a.y + a.h, b.y + b.h);
    if (x0 >= x1 || y0 >= y1) return 0.0;
    return static_cast<double>(x1 - x0) * (y1 - y0);
}

int part_id_by_name(const PartTreeModel& m, const std::string& name) {
    for (int i = 0; i < m.part_count(); ++i)
        if (m.parts[i].name == name) return i;
    return -1;
}

}  // namespace

std::vector<std::string> detect_double_counts(const Detection& d,
                                              const PartTreeModel& m, double thresh1) {
    std::vector<std::string> flagged;
    for (const SiblingPair& pair : double_count_pairs()) {
        const int a = part_id_by_name(m, joint_names_2d()[pair.left]);
        const int b = part_id_by_name(m, joint_names_2d()[pair.right]);
        if (a < 0 || b < 0) continue;  // toy trees without named limbs
        const BoundingBox ba = part_box(m, a, d.parts[a].cx, d.parts[a].cy);
        const BoundingBox bb = part_box(m, b, d.parts[b].cx, d.parts[b].cy);
        const double inter = box_intersection(ba, bb);
        const double min_area = std::min(static_cast<double>(ba.w) * ba.h,
                                         static_cast<double>(bb.w) * bb.h);
        if (inter > thresh1 * min_area) flagged.push_back(pair.label);
    }
    return flagged;
}

namespace {

double config_score(const std::vector<Candidate>& config, const PartTreeModel& m) {
    double total = 0.0;
    for (int i = 0; i < static_cast<int>(config.size()); ++i) {
        const Candidate& c = config[i];
        const double bias = m.types[i][c.type].bias;
        total += (c.unary - bias) * c.blob_overlap + bias;
    }
    for (int child = 1; child < static_cast<int>(config.size()); ++child) {
        const int parent = m.parts[child].parent;
        const Candidate& cc = config[child];
        const Candidate& cp = config[parent];
        const PartType& ct = m.types[child][cc.type];
        const DeformWeights& dw = m.pairwise[child].deform[cc.type][cp.type];
        const double dx = cc.cx - cp.cx - ct.anchor_dx;
        const double dy = cc.cy - cp.cy - ct.anchor_dy;
        const double pair_score = deform_score_1d(dw.w_dx, dw.w_dx2, dx) +
                                  deform_score_1d(dw.w_dy, dw.w_dy2, dy) +
                                  m.pairwise[child].co_occurrence[cc.type][cp.type];
        total += pair_score * cc.blob_overlap * cp.blob_overlap;
    }
    return total;
}

std::vector<Candidate> config_from_detection(const Detection& d, const PartTreeModel& m,
                                             const ResponseStack& rs,
                                             const MaskIntegral& integral) {
    std::vector<Candidate> config(m.part_count());
    for (int part = 0; part < m.part_count(); ++part)
        config[part] = make_candidate(rs, m, integral, part, d.parts[part].type,
                                      d.parts[part].cx, d.parts[part].cy, true);
    return config;
}

// Parts on the tree path between the two flagged siblings (through their
// lowest common ancestor).
void add_tree_path(const PartTreeModel& m, int a, int b, std::vector<char>& in_set) {
    std::vector<char> anc(m.part_count(), 0);
    for (int p = a; p >= 0; p = m.parts[p].parent) anc[p] = 1;
    int lca = b;
    while (!anc[lca]) lca = m.parts[lca].parent;
    for (int p = a; p != lca; p = m.parts[p].parent) in_set[p] = 1;
    for (int p = b; p != lca; p = m.parts[p].parent) in_set[p] = 1;
    in_set[lca] = 1;
}

}  // namespace

double score_config(const Detection& d, const PartTreeModel& m,
                    const ResponseStack& rs, const BlobMask& mask) {
    const MaskIntegral integral(mask);
    return config_score(config_from_detection(d, m, rs, integral), m);
}

Detection optimize_global(const std::vector<CandidateSet>& candidates,
                          const PartTreeModel& m, const ResponseStack& rs,
                          const BlobMask& mask,
                          const std::vector<std::string>& flagged_pairs,
                          const Detection& baseline) {
    const MaskIntegral integral(mask);
    Detection out = baseline;

    std::vector<Candidate> config = config_from_detection(baseline, m, rs, integral);
    double best_score = config_score(config, m);

    if (flagged_pairs.empty()) {
        out.s_mc = best_score;
        return out;
    }
    for (const std::string& label : flagged_pairs) out.flags.push_back(label);

    // Parts free to move: the flagged siblings plus the paths between them.
    std::vector<char> in_set(m.part_count(), 0);
    for (const SiblingPair& pair : double_count_pairs()) {
        if (std::find(flagged_pairs.begin(), flagged_pairs.end(), pair.label) ==
            flagged_pairs.end())
            continue;
        const int a = part_id_by_name(m, joint_names_2d()[pair.left]);
        const int b = part_id_by_name(m, joint_names_2d()[pair.right]);
        if (a < 0 || b < 0) continue;
        add_tree_path(m, a, b, in_set);
    }
    std::vector<int> free_parts;
    for (int p = 0; p < m.part_count(); ++p)
        if (in_set[p]) free_parts.push_back(p);
    for (const int p : free_parts)
        if (candidates[p].fallback_only) {
            out.flags.push_back("candidate_fallback");
            break;
        }

    double product = 1.0;
    for (const int p : free_parts) product *= candidates[p].candidates.size();

    std::vector<Candidate> best_config = config;
    if (product <= 1e6) {
        // Exhaustive sweep of the restricted candidate product.
        std::vector<std::size_t> idx(free_parts.size(), 0);
        while (true) {
            for (std::size_t i = 0; i < free_parts.size(); ++i)
                config[free_parts[i]] = candidates[free_parts[i]].candidates[idx[i]];
            const double s = config_score(config, m);
            if (s > best_score) {
                best_score = s;
                best_config = config;
            }
            std::size_t carry = 0;
            while (carry < idx.size()) {
                if (++idx[carry] < candidates[free_parts[carry]].candidates.size()) break;
                idx[carry] = 0;
                ++carry;
            }
            if (carry == idx.size()) break;
        }
        config = best_config;
    } else {
        out.flags.push_back("product_overflow");
    }

    // Coordinate ascent to a fixed point over the same part set.
    bool moved = true;
    while (moved) {
        moved = false;
        for (const int p : free_parts) {
            const Candidate current = config[p];
            Candidate best_cand = current;
            double local_best = best_score;
            for (const Candidate& c : candidates[p].candidates) {
                config[p] = c;
                const double s = config_score(config, m);
                if (s > local_best) {
                    local_best = s;
                    best_cand = c;
                }
            }
            config[p] = best_cand;
            if (local_best > best_score) {
                best_score = local_best;
                moved = true;
            }
        }
    }

    for (int p = 0; p < m.part_count(); ++p)
        out.parts[p] = {p, config[p].cx, config[p].cy, config[p].type};
    out.s_mc = best_score;
    return out;
}

}  // namespace partforest
