#include "partforest/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <nlohmann/json.hpp>

#include "partforest/background.hpp"
#include "partforest/error.hpp"
#include "partforest/hog.hpp"
#include "partforest/log.hpp"
#include "partforest/plot.hpp"
#include "partforest/rng.hpp"

namespace fs = std::filesystem;

namespace partforest {

namespace {

std::string frame_name(const char* prefix, int index) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%04d.pgm", prefix, index);
    return buf;
}

std::vector<SceneRecord> write_split(const std::vector<SyntheticScene>& scenes,
                                     const std::string& dir, const char* split,
                                     const std::string& action) {
    std::vector<SceneRecord> records;
    records.reserve(scenes.size());
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        SceneRecord rec;
        rec.index = static_cast<int>(i);
        rec.action = action;
        rec.seed = scenes[i].rng_seed;
        rec.pose2d = scenes[i].pose2d;
        rec.pose3d = scenes[i].pose3d;
        rec.frame_path = std::string("frames/") + frame_name(split, rec.index);
        rec.mask_path = std::string("masks/") + frame_name(split, rec.index);
        write_pgm(scenes[i].frame, dir + "/" + rec.frame_path);
        write_pgm(scenes[i].true_mask, dir + "/" + rec.mask_path);
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace

void run_synth(const ExperimentConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    const Action action = action_from_string(cfg.action);
    const ActorStyle style = style_by_id(cfg.actor_style);

    const std::string dir = out_dir + "/dataset";
    fs::create_directories(dir + "/frames");
    fs::create_directories(dir + "/masks");

    write_pgm(render_background(style, cfg.canvas_w, cfg.canvas_h), dir + "/background.pgm");

    const auto train = synth_sequence(cfg.n_train, action, style, cfg.seed,
                                      SequenceKind::kTrain, cfg.canvas_w, cfg.canvas_h);
    const auto test = synth_sequence(cfg.n_test, action, style, cfg.seed,
                                     SequenceKind::kTest, cfg.canvas_w, cfg.canvas_h);
    write_scene_manifest(write_split(train, dir, "train", cfg.action),
                         dir + "/scenes_train.jsonl");
    write_scene_manifest(write_split(test, dir, "test", cfg.action),
                         dir + "/scenes_test.jsonl");

    std::cout << "synth: wrote " << train.size() << " train and " << test.size()
              << " test frames (" << cfg.action << "/" << cfg.actor_style << ") to "
              << dir << "\n";
}

Dataset load_dataset(const std::string& dir) {
    Dataset ds;
    ds.dir = dir;
    ds.train = read_scene_manifest(dir + "/scenes_train.jsonl");
    ds.test = read_scene_manifest(dir + "/scenes_test.jsonl");
    return ds;
}

ImageGrid load_frame(const Dataset& ds, const SceneRecord& rec) {
    return read_pgm(ds.dir + "/" + rec.frame_path);
}

BlobMask load_mask(const Dataset& ds, const SceneRecord& rec) {
    return read_pgm_mask(ds.dir + "/" + rec.mask_path);
}

ImageGrid load_dataset_background(const Dataset& ds) {
    return read_pgm(ds.dir + "/background.pgm");
}

// ---------------------------------------------------------------------------
// detection records
// ---------------------------------------------------------------------------

DetectionRecord to_record(const Detection& det, const PartTreeModel& m) {
    DetectionRecord rec;
    rec.frame_index = det.frame_index;
    rec.root_score = det.root_score;
    rec.has_s_mc = det.s_mc.has_value();
    rec.s_mc = det.s_mc.value_or(0.0);
    rec.flags = det.flags;
    rec.pose2d.resize(2 * det.parts.size());
    for (std::size_t i = 0; i < det.parts.size(); ++i) {
        rec.part_names.push_back(m.parts[i].name);
        rec.types.push_back(det.parts[i].type);
        rec.pose2d[2 * i] = placement_x_px(m, det.parts[i]);
        rec.pose2d[2 * i + 1] = placement_y_px(m, det.parts[i]);
    }
    return rec;
}

void write_detections(const std::vector<DetectionRecord>& records,
                      const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path);
    for (const DetectionRecord& rec : records) {
        nlohmann::json parts = nlohmann::json::array();
        for (std::size_t i = 0; i < rec.part_names.size(); ++i)
            parts.push_back({{"name", rec.part_names[i]},
                             {"x_px", rec.pose2d[2 * i]},
                             {"y_px", rec.pose2d[2 * i + 1]},
                             {"type", rec.types[i]}});
        nlohmann::json j{{"frame_index", rec.frame_index},
                         {"parts", parts},
                         {"root_score", rec.root_score},
                         {"flags", rec.flags}};
        if (rec.has_s_mc)
            j["s_mc"] = rec.s_mc;
        else
            j["s_mc"] = nullptr;
        f << j.dump() << "\n";
    }
    if (!f) throw DataError("short write: " + path);
}

std::vector<DetectionRecord> read_detections(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open: " + path);
    std::map<std::string, int> joint_index;
    for (int j = 0; j < kNumJoints2d; ++j) joint_index[joint_names_2d()[j]] = j;

    std::vector<DetectionRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("bad detection line " + std::to_string(line_no) + " in " +
                            path + ": " + e.what());
        }
        DetectionRecord rec;
        rec.frame_index = j.at("frame_index").get<int>();
        rec.root_score = j.at("root_score").get<double>();
        if (j.contains("s_mc") && !j.at("s_mc").is_null()) {
            rec.has_s_mc = true;
            rec.s_mc = j.at("s_mc").get<double>();
        }
        if (j.contains("flags")) rec.flags = j.at("flags").get<std::vector<std::string>>();
        const auto& parts = j.at("parts");
        rec.part_names.assign(kNumJoints2d, "");
        rec.types.assign(kNumJoints2d, 0);
        rec.pose2d.assign(kPose2dDim, 0.0);
        int seen = 0;
        for (const auto& p : parts) {
            const std::string name = p.at("name").get<std::string>();
            const auto it = joint_index.find(name);
            if (it == joint_index.end())
                throw DataError("unknown part name '" + name + "' in " + path);
            const int idx = it->second;
            rec.part_names[idx] = name;
            rec.types[idx] = p.at("type").get<int>();
            rec.pose2d[2 * idx] = p.at("x_px").get<double>();
            rec.pose2d[2 * idx + 1] = p.at("y_px").get<double>();
            ++seen;
        }
        if (seen != kNumJoints2d)
            throw DataError("detection line " + std::to_string(line_no) +
                            " does not cover all 13 joints");
        records.push_back(std::move(rec));
    }
    return records;
}

void write_predictions(const std::vector<PredictionRecord>& records,
                       const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path);
    for (const PredictionRecord& rec : records) {
        const nlohmann::json j{{"frame_index", rec.frame_index},
                               {"pose3d", rec.pose3d},
                               {"variance", rec.variance}};
        f << j.dump() << "\n";
    }
    if (!f) throw DataError("short write: " + path);
}

std::vector<PredictionRecord> read_predictions(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open: " + path);
    std::vector<PredictionRecord> records;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        PredictionRecord rec;
        rec.frame_index = j.at("frame_index").get<int>();
        rec.pose3d = j.at("pose3d").get<std::vector<double>>();
        rec.variance = j.at("variance").get<std::vector<double>>();
        if (rec.pose3d.size() != kPose3dDim)
            throw DataError("bad pose3d length in " + path);
        records.push_back(std::move(rec));
    }
    return records;
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

namespace {

struct AnchorCell {
    int cx = 0;
    int cy = 0;
};

AnchorCell anchor_cell_for_joint(const PartTreeModel& m, double x_px, double y_px,
                                 int part, int cells_x, int cells_y) {
    const double cs = m.feature_config.cell_size;
    const int tw = m.parts[part].template_w, th = m.parts[part].template_h;
    AnchorCell c;
    c.cx = std::clamp(static_cast<int>(std::lround(x_px / cs - tw / 2.0)), 0,
                      cells_x - tw);
    c.cy = std::clamp(static_cast<int>(std::lround(y_px / cs - th / 2.0)), 0,
                      cells_y - th);
    return c;
}

}  // namespace

PartTreeModel train_part_model(const ExperimentConfig& cfg, const Dataset& ds) {
    PartTreeModel m = make_default_skeleton(
        FeatureConfig{cfg.cell_size, cfg.n_orientations}, cfg.template_cells);
    const int k = m.part_count();
    const int n = static_cast<int>(ds.train.size());
    if (n < 8) throw DataError("training needs at least 8 frames");

    log_info("train: computing features for ", n, " frames");
    std::vector<FeatureMap> features;
    features.reserve(n);
    for (const SceneRecord& rec : ds.train)
        features.push_back(
            compute_hog(load_frame(ds, rec), cfg.cell_size, cfg.n_orientations));
    const int cells_x = features[0].cells_x, cells_y = features[0].cells_y;

    // Anchor cells per frame and part.
    std::vector<std::vector<AnchorCell>> cells(n, std::vector<AnchorCell>(k));
    for (int f = 0; f < n; ++f)
        for (int p = 0; p < k; ++p)
            cells[f][p] = anchor_cell_for_joint(m, ds.train[f].pose2d[2 * p],
                                                ds.train[f].pose2d[2 * p + 1], p,
                                                cells_x, cells_y);

    // Types from parent-relative offsets; the root clusters against the
    // figure's mean cell so its mixture tracks the pose phase.
    std::vector<std::vector<int>> labels(k);
    m.types.assign(k, {});
    m.pairwise.assign(k, {});
    for (int p = 0; p < k; ++p) {
        std::vector<Offset2d> offsets(n);
        for (int f = 0; f < n; ++f) {
            double ref_x, ref_y;
            if (m.parts[p].parent >= 0) {
                ref_x = cells[f][m.parts[p].parent].cx;
                ref_y = cells[f][m.parts[p].parent].cy;
            } else {
                double sx = 0.0, sy = 0.0;
                for (int q = 0; q < k; ++q) {
                    sx += cells[f][q].cx;
                    sy += cells[f][q].cy;
                }
                ref_x = sx / k;
                ref_y = sy / k;
            }
            offsets[f] = {cells[f][p].cx - ref_x, cells[f][p].cy - ref_y};
        }
        const ClusterResult cr =
            cluster_part_types(offsets, m.parts[p].n_types, cfg.seed ^ (0x51ed270b + p));
        labels[p] = cr.labels;
        m.types[p].resize(m.parts[p].n_types);
        for (int t = 0; t < m.parts[p].n_types; ++t) {
            m.types[p][t].anchor_dx = cr.centroids[t].dx;
            m.types[p][t].anchor_dy = cr.centroids[t].dy;
        }
    }

    // Ridge templates per (part, type).
    log_info("train: fitting templates");
    for (int p = 0; p < k; ++p) {
        const int tw = m.parts[p].template_w, th = m.parts[p].template_h;
        for (int t = 0; t < m.parts[p].n_types; ++t) {
            std::vector<std::vector<double>> positives;
            for (int f = 0; f < n; ++f)
                if (labels[p][f] == t)
                    positives.push_back(
                        crop_feature(features[f], cells[f][p].cx, cells[f][p].cy, tw, th));
            if (positives.empty())
                // k-means guarantees non-empty clusters, but keep the fit total.
                positives.push_back(crop_feature(features[0], cells[0][p].cx,
                                                 cells[0][p].cy, tw, th));

            Rng rng(cfg.seed ^ (0x9e3779b9u * (p * 31 + t + 1)));
            std::vector<std::vector<double>> negatives;
            const int want = std::max(cfg.negatives_per_type, 10);
            while (static_cast<int>(negatives.size()) < want) {
                const int f = static_cast<int>(rng.below(n));
                const int cx = static_cast<int>(rng.below(cells_x - tw + 1));
                const int cy = static_cast<int>(rng.below(cells_y - th + 1));
                if (std::abs(cx - cells[f][p].cx) <= 2 && std::abs(cy - cells[f][p].cy) <= 2)
                    continue;  // too close to the true part
                negatives.push_back(crop_feature(features[f], cx, cy, tw, th));
            }
            const TemplateFit fit = fit_templates(positives, negatives, cfg.ridge_lambda);
            m.types[p][t].filter = fit.filter;
            m.types[p][t].bias = fit.bias;
        }
    }

    // Generative pairwise fits on anchor-relative cell offsets.
    for (int p = 1; p < k; ++p) {
        const int parent = m.parts[p].parent;
        PairwiseSamples samples;
        samples.offsets.assign(
            m.parts[p].n_types,
            std::vector<std::vector<Offset2d>>(m.parts[parent].n_types));
        for (int f = 0; f < n; ++f) {
            const int tc = labels[p][f];
            const int tp = labels[parent][f];
            const PartType& ct = m.types[p][tc];
            samples.offsets[tc][tp].push_back(
                {cells[f][p].cx - cells[f][parent].cx - ct.anchor_dx,
                 cells[f][p].cy - cells[f][parent].cy - ct.anchor_dy});
        }
        m.pairwise[p] = fit_pairwise(samples);
    }

    m.validate();
    return m;
}

void run_train(const ExperimentConfig& cfg, const std::string& dataset_dir,
               const std::string& model_path, const std::string& lifter_path) {
    cfg.validate();
    const Dataset ds = load_dataset(dataset_dir);

    const PartTreeModel m = train_part_model(cfg, ds);
    save_model(m, model_path);
    log_info("train: model written to ", model_path);

    const int n = static_cast<int>(ds.train.size());
    Eigen::MatrixXd poses2d(n, kPose2dDim), poses3d(n, kPose3dDim);
    for (int f = 0; f < n; ++f) {
        for (int i = 0; i < kPose2dDim; ++i) poses2d(f, i) = ds.train[f].pose2d[i];
        for (int i = 0; i < kPose3dDim; ++i) poses3d(f, i) = ds.train[f].pose3d[i];
    }
    GpLifter lifter;
    if (cfg.gpr_optimize) {
        lifter = train_lifter(poses2d, poses3d);
    } else {
        for (int d = 0; d < kPose3dDim; ++d) {
            lifter.dims.push_back(train_gp(poses2d, poses3d.col(d), false));
            lifter.output_means.push_back(lifter.dims.back().targets_mean);
        }
    }
    save_lifter(lifter, lifter_path);
    log_info("train: lifter written to ", lifter_path);
    std::cout << "train: fitted " << m.part_count() << " parts and " << kPose3dDim
              << " output GPs from " << n << " frames\n";
}

// ---------------------------------------------------------------------------
// detection
// ---------------------------------------------------------------------------

int model_nms_radius(const PartTreeModel& m) {
    int r = 1;
    for (const PartSpec& p : m.parts) r = std::max({r, p.template_w, p.template_h});
    return r;
}

FrameDetection detect_frame(const ExperimentConfig& cfg, const PartTreeModel& m,
                            const ImageGrid& frame, const BlobMask& mask,
                            bool enhanced) {
    FrameDetection out;
    out.mask = mask;

    const FeatureMap fm = compute_hog(frame, cfg.cell_size, cfg.n_orientations);
    const ResponseStack rs = part_responses(fm, m);
    const int radius = model_nms_radius(m);

    const RootScore plain = pass_messages(rs, m, nullptr, false);
    const auto plain_roots = find_root(plain.map, cfg.root_min_score, radius);
    if (plain_roots.empty()) throw DataError("no root detection above min score");
    Detection baseline = backtrack(plain_roots[0].cx, plain_roots[0].cy, plain, m);

    if (!enhanced) {
        baseline.flags = detect_double_counts(baseline, m, cfg.thresh1);
        baseline.s_mc = score_config(baseline, m, rs, mask);
        out.detection = baseline;
        return out;
    }

    const RootScore gated = pass_messages(rs, m, &mask, true, cfg.thresh2);
    const auto gated_roots = find_root(gated.map, cfg.root_min_score, radius);
    if (gated_roots.empty()) throw DataError("no gated root detection above min score");
    Detection gated_bt = backtrack(gated_roots[0].cx, gated_roots[0].cy, gated, m);

    // Seed with whichever backtrack scores higher under the multi-cue
    // objective; keep the other one in the candidate pool so the optimizer
    // result dominates both.
    const double s_plain = score_config(baseline, m, rs, mask);
    const double s_gated = score_config(gated_bt, m, rs, mask);
    const Detection& seed = s_gated >= s_plain ? gated_bt : baseline;
    const Detection& other = s_gated >= s_plain ? baseline : gated_bt;

    auto candidates = enumerate_candidates(rs, m, mask, cfg.thresh2, cfg.top_n, seed);
    add_detection_candidates(candidates, other, rs, m, mask);

    const auto flagged = detect_double_counts(seed, m, cfg.thresh1);
    out.detection = optimize_global(candidates, m, rs, mask, flagged, seed);
    return out;
}

void run_detect(const ExperimentConfig& cfg, const std::string& model_path,
                const std::string& dataset_dir, bool enhanced,
                const std::string& detections_path) {
    cfg.validate();
    const PartTreeModel m = load_model(model_path);
    const Dataset ds = load_dataset(dataset_dir);

    BackgroundModel bg(load_dataset_background(ds), cfg.bg_alpha, cfg.bg_threshold);
    std::vector<DetectionRecord> records;
    records.reserve(ds.test.size());
    for (std::size_t f = 0; f < ds.test.size(); ++f) {
        const ImageGrid frame = load_frame(ds, ds.test[f]);
        const BlobMask mask = clean_mask(subtract_background(bg, frame), cfg.min_area);
        bg = update_background(bg, frame);

        FrameDetection fd = detect_frame(cfg, m, frame, mask, enhanced);
        fd.detection.frame_index = static_cast<int>(f);
        records.push_back(to_record(fd.detection, m));
        log_debug("detect: frame ", f, " root_score=", fd.detection.root_score,
                  " s_mc=", fd.detection.s_mc.value_or(0.0));
    }
    write_detections(records, detections_path);
    std::cout << "detect: wrote " << records.size() << " "
              << (enhanced ? "enhanced" : "baseline") << " detections to "
              << detections_path << "\n";
}

// ---------------------------------------------------------------------------
// lifting, evaluation, rendering
// ---------------------------------------------------------------------------

void run_lift(const std::string& lifter_path, const std::string& detections_path,
              const std::string& predictions_path) {
    const GpLifter lifter = load_lifter(lifter_path);
    const auto detections = read_detections(detections_path);
    std::vector<PredictionRecord> records;
    records.reserve(detections.size());
    for (const DetectionRecord& det : detections) {
        const LiftResult lr = lift(lifter, det.pose2d);
        records.push_back({det.frame_index, lr.pose3d, lr.variance});
    }
    write_predictions(records, predictions_path);
    std::cout << "lift: wrote " << records.size() << " 3D predictions to "
              << predictions_path << "\n";
}

void run_eval(const ExperimentConfig& cfg, const std::string& dataset_dir,
              const std::string& detections_path, const std::string& predictions_path,
              const std::string& report_path, const std::string& plot_dir) {
    cfg.validate();
    const Dataset ds = load_dataset(dataset_dir);
    const auto detections = read_detections(detections_path);
    const auto predictions = read_predictions(predictions_path);
    if (detections.size() != ds.test.size())
        throw DataError("detection count " + std::to_string(detections.size()) +
                        " does not match test frame count " +
                        std::to_string(ds.test.size()));
    if (predictions.size() != ds.test.size())
        throw DataError("prediction count does not match test frame count");

    PoseSeq det2d, gt2d, pred3d, gt3d;
    for (std::size_t f = 0; f < ds.test.size(); ++f) {
        det2d.push_back(detections[f].pose2d);
        gt2d.push_back(ds.test[f].pose2d);
        pred3d.push_back(predictions[f].pose3d);
        gt3d.push_back(ds.test[f].pose3d);
    }

    const EvalReport report =
        build_report(det2d, gt2d, pred3d, gt3d, cfg.pck_alpha, cfg.min_sep);
    write_report_json(report, report_path);

    fs::create_directories(plot_dir);
    const Rgb pred_color{40, 140, 40};
    const Rgb gt_color{40, 60, 200};
    const struct {
        int joint;
        int axis;
        const char* name;
    } traces[] = {
        {kLElb3d, 0, "left_elbow_x"},
        {kLWri3d, 0, "left_wrist_x"},
    };
    for (const auto& tr : traces) {
        const auto pairs = joint_trace(pred3d, gt3d, tr.joint, tr.axis);
        Series pred{"estimated", pred_color, {}};
        Series gt{"ground truth", gt_color, {}};
        for (const auto& [p, g] : pairs) {
            pred.values.push_back(p);
            gt.values.push_back(g);
        }
        line_chart({pred, gt}, "frame id", "mm",
                   plot_dir + "/" + tr.name + ".png");
    }

    std::cout << "eval: mean_pck=" << report.mean_pck << " mpjpe_mm=" << report.mpjpe_mm
              << " double_count_rate=" << report.double_count_rate << " -> "
              << report_path << "\n";
}

void run_render(const ExperimentConfig& cfg, const std::string& dataset_dir,
                const std::string& detections_path, const std::string& overlay_dir) {
    cfg.validate();
    const Dataset ds = load_dataset(dataset_dir);
    const auto detections = read_detections(detections_path);
    if (detections.size() != ds.test.size())
        throw DataError("detection count does not match test frame count");
    fs::create_directories(overlay_dir);

    const Rgb left{60, 220, 60}, right{230, 70, 70}, center{240, 210, 60};
    for (std::size_t f = 0; f < ds.test.size(); ++f) {
        RgbImage img = to_rgb(load_frame(ds, ds.test[f]));
        const auto& pose = detections[f].pose2d;
        for (int j = 1; j < kNumJoints2d; ++j) {
            const int parent = kJointParent[j];
            const bool is_left = joint_names_2d()[j].rfind("left", 0) == 0;
            const Rgb c = is_left ? left : right;
            draw_line(img, pose[2 * parent], pose[2 * parent + 1], pose[2 * j],
                      pose[2 * j + 1], c);
        }
        for (int j = 0; j < kNumJoints2d; ++j) {
            const bool is_left = joint_names_2d()[j].rfind("left", 0) == 0;
            const Rgb c = j == 0 ? center : (is_left ? left : right);
            fill_circle(img, pose[2 * j], pose[2 * j + 1], 2.0, c);
        }
        char name[64];
        std::snprintf(name, sizeof name, "/overlay_%04zu.png", f);
        write_png(img, overlay_dir + name);
    }
    std::cout << "render: wrote " << detections.size() << " overlays to " << overlay_dir
              << "\n";
}

}  // namespace partforest
