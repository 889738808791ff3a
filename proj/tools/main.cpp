#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "partforest/config.hpp"
#include "partforest/error.hpp"
#include "partforest/pipeline.hpp"

namespace fs = std::filesystem;
using namespace partforest;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct GlobalOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

ExperimentConfig resolve_config(const GlobalOpts& g) {
    ExperimentConfig cfg;
    if (!g.config_path.empty()) cfg = load_config(g.config_path);
    if (g.seed) cfg.seed = *g.seed;
    if (g.out) cfg.out_dir = *g.out;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"partforest: articulated 2D pose detection with blob-fused "
                 "global optimization and GP 2D->3D lifting"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "experiment config file (key=value)");
    auto* seed_opt = app.add_option("--seed", "override config seed");
    auto* out_opt = app.add_option("--out", "override config output directory");

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");

    auto* train = app.add_subcommand("train", "fit part templates and the GP lifter");
    std::string dataset, model_path, lifter_path;
    train->add_option("--dataset", dataset, "dataset directory (default <out>/dataset)");
    train->add_option("--model", model_path, "output model path");
    train->add_option("--lifter", lifter_path, "output lifter path");

    auto* detect = app.add_subcommand("detect", "detect 2D poses on the test split");
    bool baseline_mode = false, enhanced_mode = false;
    detect->add_flag("--baseline", baseline_mode, "plain backtracking detector");
    detect->add_flag("--enhanced", enhanced_mode, "blob-gated, globally optimized detector");
    std::string det_model, det_dataset, det_out;
    detect->add_option("--model", det_model, "model path");
    detect->add_option("--dataset", det_dataset, "dataset directory");
    detect->add_option("--detections", det_out, "output detections path");

    auto* lift_cmd = app.add_subcommand("lift", "lift 2D detections to 3D poses");
    std::string lift_lifter, lift_dets, lift_out;
    lift_cmd->add_option("--lifter", lift_lifter, "lifter path");
    lift_cmd->add_option("--detections", lift_dets, "detections path");
    lift_cmd->add_option("--predictions", lift_out, "output predictions path");

    auto* eval_cmd = app.add_subcommand("eval", "score detections and predictions");
    std::string eval_dataset, eval_dets, eval_preds, eval_report, eval_plots;
    eval_cmd->add_option("--dataset", eval_dataset, "dataset directory");
    eval_cmd->add_option("--detections", eval_dets, "detections path");
    eval_cmd->add_option("--predictions", eval_preds, "predictions path");
    eval_cmd->add_option("--report", eval_report, "output report path");
    eval_cmd->add_option("--plots", eval_plots, "output plot directory");

    auto* render = app.add_subcommand("render", "draw detection overlays");
    std::string render_dataset, render_dets, render_dir;
    render->add_option("--dataset", render_dataset, "dataset directory");
    render->add_option("--detections", render_dets, "detections path");
    render->add_option("--overlays", render_dir, "output overlay directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (seed_opt->count()) g.seed = seed_opt->as<std::uint64_t>();
        if (out_opt->count()) g.out = out_opt->as<std::string>();
        const ExperimentConfig cfg = resolve_config(g);
        const std::string out = cfg.out_dir;
        fs::create_directories(out);
        auto dflt = [&](const std::string& v, const std::string& fallback) {
            return v.empty() ? out + "/" + fallback : v;
        };

        if (synth->parsed()) {
            run_synth(cfg, out);
        } else if (train->parsed()) {
            run_train(cfg, dflt(dataset, "dataset"), dflt(model_path, "model.pfm"),
                      dflt(lifter_path, "lifter.gpl"));
        } else if (detect->parsed()) {
            if (baseline_mode == enhanced_mode)
                throw ConfigError("detect: pass exactly one of --baseline / --enhanced");
            const std::string tag = enhanced_mode ? "enhanced" : "baseline";
            run_detect(cfg, dflt(det_model, "model.pfm"), dflt(det_dataset, "dataset"),
                       enhanced_mode, dflt(det_out, "detections_" + tag + ".jsonl"));
        } else if (lift_cmd->parsed()) {
            if (lift_dets.empty())
                throw ConfigError("lift: --detections is required");
            const std::string stem = fs::path(lift_dets).stem().string();
            std::string suffix = "predictions.jsonl";
            if (stem.rfind("detections_", 0) == 0)
                suffix = "predictions_" + stem.substr(11) + ".jsonl";
            run_lift(dflt(lift_lifter, "lifter.gpl"), lift_dets, dflt(lift_out, suffix));
        } else if (eval_cmd->parsed()) {
            if (eval_dets.empty() || eval_preds.empty())
                throw ConfigError("eval: --detections and --predictions are required");
            run_eval(cfg, dflt(eval_dataset, "dataset"), eval_dets, eval_preds,
                     dflt(eval_report, "report.json"), dflt(eval_plots, "plots"));
        } else if (render->parsed()) {
            if (render_dets.empty())
                throw ConfigError("render: --detections is required");
            run_render(cfg, dflt(render_dataset, "dataset"), render_dets,
                       dflt(render_dir, "overlays"));
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}
