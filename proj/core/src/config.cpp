#include "partforest/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "partforest/error.hpp"
#include "partforest/synth.hpp"

namespace partforest {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Field {
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
T parse_number(const std::string& key, const std::string& value);

template <>
double parse_number<double>(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value for " + key + ": '" + value + "'");
    }
    if (pos != value.size())
        throw ConfigError("trailing junk in value for " + key + ": '" + value + "'");
    return v;
}

template <>
int parse_number<int>(const std::string& key, const std::string& value) {
    const double v = parse_number<double>(key, value);
    if (v != std::floor(v)) throw ConfigError(key + " must be an integer");
    return static_cast<int>(v);
}

template <>
std::uint64_t parse_number<std::uint64_t>(const std::string& key,
                                          const std::string& value) {
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("junk");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad unsigned value for " + key + ": '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(key + " must be true/false");
}

const std::map<std::string, Field>& field_table() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> t;
        auto add_str = [&t](const std::string& k, std::string ExperimentConfig::* p) {
            t[k] = {[p](ExperimentConfig& c, const std::string& v) { c.*p = v; },
                    [p](const ExperimentConfig& c) { return c.*p; }};
        };
        auto add_int = [&t](const std::string& k, int ExperimentConfig::* p) {
            t[k] = {[k, p](ExperimentConfig& c, const std::string& v) {
                        c.*p = parse_number<int>(k, v);
                    },
                    [p](const ExperimentConfig& c) { return std::to_string(c.*p); }};
        };
        auto add_dbl = [&t](const std::string& k, double ExperimentConfig::* p) {
            t[k] = {[k, p](ExperimentConfig& c, const std::string& v) {
                        c.*p = parse_number<double>(k, v);
                    },
                    [p](const ExperimentConfig& c) { return fmt_double(c.*p); }};
        };
        add_str("action", &ExperimentConfig::action);
        add_str("actor_style", &ExperimentConfig::actor_style);
        add_str("out_dir", &ExperimentConfig::out_dir);
        add_int("n_train", &ExperimentConfig::n_train);
        add_int("n_test", &ExperimentConfig::n_test);
        add_int("min_area", &ExperimentConfig::min_area);
        add_int("cell_size", &ExperimentConfig::cell_size);
        add_int("n_orientations", &ExperimentConfig::n_orientations);
        add_int("template_cells", &ExperimentConfig::template_cells);
        add_int("top_n", &ExperimentConfig::top_n);
        add_int("negatives_per_type", &ExperimentConfig::negatives_per_type);
        add_int("canvas_w", &ExperimentConfig::canvas_w);
        add_int("canvas_h", &ExperimentConfig::canvas_h);
        add_dbl("thresh1", &ExperimentConfig::thresh1);
        add_dbl("thresh2", &ExperimentConfig::thresh2);
        add_dbl("bg_alpha", &ExperimentConfig::bg_alpha);
        add_dbl("bg_threshold", &ExperimentConfig::bg_threshold);
        add_dbl("root_min_score", &ExperimentConfig::root_min_score);
        add_dbl("ridge_lambda", &ExperimentConfig::ridge_lambda);
        add_dbl("pck_alpha", &ExperimentConfig::pck_alpha);
        add_dbl("min_sep", &ExperimentConfig::min_sep);
        t["seed"] = {[](ExperimentConfig& c, const std::string& v) {
                         c.seed = parse_number<std::uint64_t>("seed", v);
                     },
                     [](const ExperimentConfig& c) { return std::to_string(c.seed); }};
        t["gpr_optimize"] = {[](ExperimentConfig& c, const std::string& v) {
                                 c.gpr_optimize = parse_bool("gpr_optimize", v);
                             },
                             [](const ExperimentConfig& c) {
                                 return c.gpr_optimize ? std::string("true")
                                                       : std::string("false");
                             }};
        return t;
    }();
    return table;
}

}  // namespace

void ExperimentConfig::validate() const {
    action_from_string(action);
    style_by_id(actor_style);
    if (n_train < 1 || n_test < 1) throw ConfigError("frame counts must be >= 1");
    if (!(thresh1 >= 0.0 && thresh1 <= 1.0)) throw ConfigError("thresh1 must be in [0,1]");
    if (!(thresh2 >= 0.0 && thresh2 <= 1.0)) throw ConfigError("thresh2 must be in [0,1]");
    if (!(bg_alpha > 0.0 && bg_alpha <= 1.0)) throw ConfigError("bg_alpha must be in (0,1]");
    if (bg_threshold < 0.0) throw ConfigError("bg_threshold must be >= 0");
    if (min_area < 0) throw ConfigError("min_area must be >= 0");
    if (cell_size < 1 || n_orientations < 1 || template_cells < 1)
        throw ConfigError("feature configuration values must be positive");
    if (top_n < 1) throw ConfigError("top_n must be >= 1");
    if (negatives_per_type < 10) throw ConfigError("need at least 10 negatives per type");
    if (!(pck_alpha > 0.0)) throw ConfigError("pck_alpha must be positive");
    if (min_sep <= 0.0) throw ConfigError("min_sep must be positive");
    if (canvas_w < 64 || canvas_h < 64) throw ConfigError("canvas must be at least 64x64");
    if (ridge_lambda < 0.0) throw ConfigError("ridge_lambda must be >= 0");
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              " is not key=value: '" + stripped + "'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        const auto it = field_table().find(key);
        if (it == field_table().end())
            throw ConfigError("unknown config key '" + key + "' on line " +
                              std::to_string(line_no));
        it->second.set(cfg, value);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

std::string config_to_text(const ExperimentConfig& cfg) {
    std::ostringstream os;
    for (const auto& [key, field] : field_table())
        os << key << " = " << field.get(cfg) << "\n";
    return os.str();
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << config_to_text(cfg);
    if (!f) throw DataError("short write: " + path);
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return config_to_text(a) == config_to_text(b);
}

}  // namespace partforest
