#include "mcsim/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mcsim/errors.hpp"

namespace mcsim {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

/// Overlay-style section parser: known keys update their targets, anything
/// else is a hard error so typos cannot silently fall back to defaults.
class SectionReader {
public:
    SectionReader(const json& section, std::string name)
        : section_(section), name_(std::move(name)) {
        if (!section_.is_object())
            throw ConfigError("config: section '" + name_ + "' must be an object");
    }

    void number(const char* key, double& out) {
        known_.insert(key);
        if (!section_.contains(key)) return;
        const json& v = section_.at(key);
        if (!v.is_number())
            throw ConfigError("config: " + name_ + "." + key + " must be a number");
        out = v.get<double>();
    }

    void integer(const char* key, int& out) {
        known_.insert(key);
        if (!section_.contains(key)) return;
        const json& v = section_.at(key);
        if (!v.is_number_integer() && !v.is_number_unsigned())
            throw ConfigError("config: " + name_ + "." + key + " must be an integer");
        out = v.get<int>();
    }

    void text(const char* key, std::string& out) {
        known_.insert(key);
        if (!section_.contains(key)) return;
        const json& v = section_.at(key);
        if (!v.is_string())
            throw ConfigError("config: " + name_ + "." + key + " must be a string");
        out = v.get<std::string>();
    }

    void number_list(const char* key, std::vector<double>& out) {
        known_.insert(key);
        if (!section_.contains(key)) return;
        const json& v = section_.at(key);
        if (!v.is_array())
            throw ConfigError("config: " + name_ + "." + key + " must be an array");
        std::vector<double> parsed;
        for (const json& item : v) {
            if (!item.is_number())
                throw ConfigError("config: " + name_ + "." + key +
                                  " must contain only numbers");
            parsed.push_back(item.get<double>());
        }
        out = std::move(parsed);
    }

    void finish() const {
        for (const auto& [key, value] : section_.items()) {
            (void)value;
            if (!known_.count(key))
                throw ConfigError("config: unknown key '" + name_ + "." + key + "'");
        }
    }

private:
    const json& section_;
    std::string name_;
    std::set<std::string> known_;
};

void require(bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("config: ") + what);
}

} // namespace

void HarnessConfig::validate() const {
    try {
        delta_geometry.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: delta_geometry: ") + e.what());
    }
    require(detector.fov_halfangle_deg > 0.0 && detector.fov_halfangle_deg <= 90.0,
            "detector.fov_halfangle_deg must be in (0, 90]");
    require(detector.max_range_cm > 0.0, "detector.max_range_cm must be positive");
    require(detector.miss_prob >= 0.0 && detector.miss_prob <= 1.0,
            "detector.miss_prob must be in [0, 1]");
    require(detector.center_noise_sigma_cm >= 0.0,
            "detector.center_noise_sigma_cm must be non-negative");
    require(world.electrode_height_cm >= 0.0,
            "world.electrode_height_cm must be non-negative");
    require(search_timing.detect_s >= 0.0, "search_timing.detect_s must be non-negative");
    require(search_timing.rotate_s >= 0.0, "search_timing.rotate_s must be non-negative");
    require(search_timing.advance_s_per_cm >= 0.0,
            "search_timing.advance_s_per_cm must be non-negative");
    require(tactile.n_per_class >= 1, "tactile.n_per_class must be at least 1");
    require(tactile.noise_sigma_n >= 0.0, "tactile.noise_sigma_n must be non-negative");
    require(train.learning_rate > 0.0, "train.learning_rate must be positive");
    require(train.momentum >= 0.0 && train.momentum < 1.0,
            "train.momentum must be in [0, 1)");
    require(train.epochs >= 1, "train.epochs must be at least 1");
    require(train.batch_size >= 1, "train.batch_size must be at least 1");
    require(!experiment.omegas_deg.empty(), "experiment.omegas_deg must be non-empty");
    require(experiment.trials_per_omega >= 1,
            "experiment.trials_per_omega must be at least 1");
    require(experiment.range_cm > 0.0, "experiment.range_cm must be positive");
    require(experiment.critical_angle_deg >= 0.0,
            "experiment.critical_angle_deg must be non-negative");
}

HarnessConfig default_config() { return HarnessConfig{}; }

std::string config_to_json(const HarnessConfig& c) {
    ordered_json doc;
    doc["delta_geometry"] = {
        {"base_radius_cm", c.delta_geometry.base_radius_cm},
        {"platform_radius_cm", c.delta_geometry.platform_radius_cm},
        {"proximal_length_cm", c.delta_geometry.proximal_length_cm},
        {"distal_length_cm", c.delta_geometry.distal_length_cm},
        {"workspace_xy_halfrange_cm", c.delta_geometry.workspace_xy_halfrange_cm},
        {"workspace_z_min_cm", c.delta_geometry.workspace_z_min_cm},
        {"workspace_z_max_cm", c.delta_geometry.workspace_z_max_cm},
        {"servo_min_deg", c.delta_geometry.servo_min_deg},
        {"servo_max_deg", c.delta_geometry.servo_max_deg},
    };
    doc["detector"] = {
        {"fov_halfangle_deg", c.detector.fov_halfangle_deg},
        {"max_range_cm", c.detector.max_range_cm},
        {"miss_prob", c.detector.miss_prob},
        {"center_noise_sigma_cm", c.detector.center_noise_sigma_cm},
        {"lighting", to_string(c.detector.lighting)},
    };
    doc["world"] = {
        {"electrode_height_cm", c.world.electrode_height_cm},
    };
    doc["search_timing"] = {
        {"detect_s", c.search_timing.detect_s},
        {"rotate_s", c.search_timing.rotate_s},
        {"advance_s_per_cm", c.search_timing.advance_s_per_cm},
    };
    doc["tactile"] = {
        {"n_per_class", c.tactile.n_per_class},
        {"noise_sigma_n", c.tactile.noise_sigma_n},
    };
    doc["train"] = {
        {"learning_rate", c.train.learning_rate},
        {"momentum", c.train.momentum},
        {"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
    };
    doc["experiment"] = {
        {"omegas_deg", c.experiment.omegas_deg},
        {"trials_per_omega", c.experiment.trials_per_omega},
        {"range_cm", c.experiment.range_cm},
        {"critical_angle_deg", c.experiment.critical_angle_deg},
    };
    return doc.dump(2) + "\n";
}

void save_config(const HarnessConfig& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << config_to_json(c);
    if (!out) throw IoError("write failed: " + path);
}

HarnessConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");

    HarnessConfig c = default_config();
    const std::set<std::string> sections{"delta_geometry", "detector", "world",
                                         "search_timing", "tactile", "train",
                                         "experiment"};
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (!sections.count(key))
            throw ConfigError("config: unknown section '" + key + "'");
    }

    if (doc.contains("delta_geometry")) {
        SectionReader r(doc.at("delta_geometry"), "delta_geometry");
        r.number("base_radius_cm", c.delta_geometry.base_radius_cm);
        r.number("platform_radius_cm", c.delta_geometry.platform_radius_cm);
        r.number("proximal_length_cm", c.delta_geometry.proximal_length_cm);
        r.number("distal_length_cm", c.delta_geometry.distal_length_cm);
        r.number("workspace_xy_halfrange_cm", c.delta_geometry.workspace_xy_halfrange_cm);
        r.number("workspace_z_min_cm", c.delta_geometry.workspace_z_min_cm);
        r.number("workspace_z_max_cm", c.delta_geometry.workspace_z_max_cm);
        r.number("servo_min_deg", c.delta_geometry.servo_min_deg);
        r.number("servo_max_deg", c.delta_geometry.servo_max_deg);
        r.finish();
    }
    if (doc.contains("detector")) {
        SectionReader r(doc.at("detector"), "detector");
        r.number("fov_halfangle_deg", c.detector.fov_halfangle_deg);
        r.number("max_range_cm", c.detector.max_range_cm);
        r.number("miss_prob", c.detector.miss_prob);
        r.number("center_noise_sigma_cm", c.detector.center_noise_sigma_cm);
        std::string lighting = to_string(c.detector.lighting);
        r.text("lighting", lighting);
        try {
            c.detector.lighting = lighting_from_string(lighting);
        } catch (const OutOfRangeError& e) {
            throw ConfigError(std::string("config: detector.lighting: ") + e.what());
        }
        r.finish();
    }
    if (doc.contains("world")) {
        SectionReader r(doc.at("world"), "world");
        r.number("electrode_height_cm", c.world.electrode_height_cm);
        r.finish();
    }
    if (doc.contains("search_timing")) {
        SectionReader r(doc.at("search_timing"), "search_timing");
        r.number("detect_s", c.search_timing.detect_s);
        r.number("rotate_s", c.search_timing.rotate_s);
        r.number("advance_s_per_cm", c.search_timing.advance_s_per_cm);
        r.finish();
    }
    if (doc.contains("tactile")) {
        SectionReader r(doc.at("tactile"), "tactile");
        r.integer("n_per_class", c.tactile.n_per_class);
        r.number("noise_sigma_n", c.tactile.noise_sigma_n);
        r.finish();
    }
    if (doc.contains("train")) {
        SectionReader r(doc.at("train"), "train");
        r.number("learning_rate", c.train.learning_rate);
        r.number("momentum", c.train.momentum);
        r.integer("epochs", c.train.epochs);
        r.integer("batch_size", c.train.batch_size);
        r.finish();
    }
    if (doc.contains("experiment")) {
        SectionReader r(doc.at("experiment"), "experiment");
        r.number_list("omegas_deg", c.experiment.omegas_deg);
        r.integer("trials_per_omega", c.experiment.trials_per_omega);
        r.number("range_cm", c.experiment.range_cm);
        r.number("critical_angle_deg", c.experiment.critical_angle_deg);
        r.finish();
    }

    c.validate();
    return c;
}

HarnessConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

} // namespace mcsim
