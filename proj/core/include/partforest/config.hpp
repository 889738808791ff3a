#pragma once

#include <cstdint>
#include <string>

namespace partforest {

// One experiment: synthesis, training, detection, lifting and evaluation all
// read from this. Serialized as flat key=value text; unknown keys are
// rejected and the file form round-trips losslessly.
struct ExperimentConfig {
    std::string action = "walk";         // walk | box
    std::string actor_style = "default";
    int n_train = 200;
    int n_test = 21;
    std::uint64_t seed = 7;

    double thresh1 = 0.5;  // double-count box overlap fraction
    double thresh2 = 0.2;  // candidate/gating blob overlap floor

    double bg_alpha = 0.05;      // background learning rate
    double bg_threshold = 25.0;  // subtraction threshold, intensity units
    int min_area = 20;           // blob cleanup, pixels

    int cell_size = 8;
    int n_orientations = 9;
    int template_cells = 4;

    int top_n = 5;
    double root_min_score = -1e18;
    double ridge_lambda = 0.01;
    int negatives_per_type = 40;

    double pck_alpha = 0.2;
    double min_sep = 8.0;

    int canvas_w = 160;
    int canvas_h = 160;

    bool gpr_optimize = true;

    std::string out_dir = "out";

    void validate() const;  // throws ConfigError on out-of-range values
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_text(const ExperimentConfig& cfg);
void save_config(const ExperimentConfig& cfg, const std::string& path);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace partforest
