#ifndef MCSIM_CONFIG_HPP
#define MCSIM_CONFIG_HPP

#include <string>
#include <vector>

#include "mcsim/classifier.hpp"
#include "mcsim/delta_kin.hpp"
#include "mcsim/search.hpp"
#include "mcsim/world.hpp"

namespace mcsim {

/// Scene parameters that are not part of the detector itself.
struct WorldConfig {
    double electrode_height_cm = 16.0;
};

/// Synthetic tactile dataset generation parameters.
struct TactileConfig {
    int n_per_class = 100;
    double noise_sigma_n = 0.4;
};

/// Monte-Carlo reliability experiment layout.
struct ExperimentConfig {
    std::vector<double> omegas_deg{-20.0, -10.0, 0.0, 10.0, 20.0};
    int trials_per_omega = 20;
    double range_cm = 25.0;          // initial charger-to-electrode distance L
    double critical_angle_deg = 3.0; // safety gate threshold
};

/// Everything the harness can tune, grouped by subsystem. Seeds are not part
/// of the config: they come from the CLI and are derived per use.
struct HarnessConfig {
    DeltaGeometry delta_geometry{};
    DetectorModel detector{};
    WorldConfig world{};
    SearchTiming search_timing{};
    TactileConfig tactile{};
    TrainConfig train{};
    ExperimentConfig experiment{};

    /// Throws ConfigError when any field is out of its documented domain.
    void validate() const;
};

HarnessConfig default_config();

/// Serialize with one JSON object per section.
std::string config_to_json(const HarnessConfig& c);
void save_config(const HarnessConfig& c, const std::string& path);

/// Parse a config document: defaults overlaid with the file's values.
/// Unknown sections or keys and type mismatches raise ConfigError, as does
/// failed validation of the result.
HarnessConfig parse_config(const std::string& json_text);
HarnessConfig load_config(const std::string& path);

} // namespace mcsim

#endif // MCSIM_CONFIG_HPP
