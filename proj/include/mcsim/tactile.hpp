#ifndef MCSIM_TACTILE_HPP
#define MCSIM_TACTILE_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mcsim/rng.hpp"

namespace mcsim {

enum class MisalignmentKind { Angular, Vertical, Horizontal };

const char* to_string(MisalignmentKind k);
MisalignmentKind misalignment_kind_from_string(const std::string& s);

/// Discrete misalignment class. Angular classes 0..5 map to tilt angles
/// 0..5 degrees; Vertical/Horizontal classes 0..4 map to offsets
/// {-10,-5,0,+5,+10} mm.
struct MisalignmentLabel {
    MisalignmentKind kind = MisalignmentKind::Angular;
    int class_index = 0;

    bool operator==(const MisalignmentLabel&) const = default;
};

int num_classes(MisalignmentKind k);
double angular_class_phi_deg(int class_index);
double translational_class_offset_mm(int class_index);

/// Continuous misalignment encoded by a label.
struct MisalignmentParams {
    double phi_deg = 0.0;
    double dx_mm = 0.0;
    double dy_mm = 0.0;
};

MisalignmentParams params_for(const MisalignmentLabel& label);

// Sensor characteristics.
inline constexpr int kTactileChannels = 2;
inline constexpr int kTactileRows = 10;
inline constexpr int kTactileCols = 10;
inline constexpr double kTaxelPitchMm = 2.41;  // sqrt(5.8 cm^2) / 10
inline constexpr double kForceFloorN = 1.0;    // below this the sensor reads 0
inline constexpr double kForceCapN = 9.0;

/// One 2-channel 10x10 pressure frame, Newtons, channel-major row-major.
/// Every stored value is either 0 or within [1, 9].
struct TactileFrame {
    std::array<double, kTactileChannels * kTactileRows * kTactileCols> force_n{};

    double& at(int ch, int r, int c);
    double at(int ch, int r, int c) const;

    bool operator==(const TactileFrame&) const = default;
};

/// Generate one frame from ground-truth misalignment.
///
/// Contact model: nominal contact is a full-width two-row band (rows 4-5) at
/// 5 N on both channels. A tilt of phi grades the force linearly across
/// columns with slope (8/9)*(phi/5) N per column, rising on channel 0 and
/// falling on channel 1 (the two electrode edges press unevenly). dy lifts
/// the band by round(dy/pitch) rows (positive dy = smaller row index); dx
/// slides the contact columns by round(dx/pitch) (positive = larger column
/// index). Gaussian noise is then added per taxel and the frame is clamped
/// to the sensing range. Throws OutOfRangeError when phi is outside [0, 5]
/// degrees or an offset exceeds 10 mm.
TactileFrame synthesize(double phi_deg, double dx_mm, double dy_mm, double noise_sigma_n,
                        Rng& rng);
TactileFrame synthesize(const MisalignmentLabel& label, double noise_sigma_n, Rng& rng);

/// Class-balanced labeled frames with a stored train/validation partition.
struct TactileDataset {
    MisalignmentKind kind = MisalignmentKind::Angular;
    std::vector<TactileFrame> frames;
    std::vector<MisalignmentLabel> labels;
    std::vector<bool> in_train;  // 67% per class, assigned by split_seed
    std::uint64_t split_seed = 0;

    std::size_t size() const { return frames.size(); }
};

inline constexpr double kTrainFraction = 0.67;

/// n_per_class frames for every class of the kind (angular default 6x100,
/// translational 5x100), deterministic under seed, with the 67/33 split
/// assigned per class. Throws OutOfRangeError when n_per_class < 1.
TactileDataset generate_dataset(MisalignmentKind kind, int n_per_class,
                                double noise_sigma_n, std::uint64_t seed);

/// CSV with one row per sample: kind, class index, then the 200 forces in
/// channel-major row-major order. Values survive a round trip losslessly.
void save_tactile_csv(const TactileDataset& d, const std::string& path);

/// Load a CSV written by save_tactile_csv. The file stores no partition, so
/// the 67/33 split is re-derived from split_seed.
TactileDataset load_tactile_csv(const std::string& path, std::uint64_t split_seed = 0);

/// JSON document carrying everything including the split assignment.
void save_tactile_json(const TactileDataset& d, const std::string& path);
TactileDataset load_tactile_json(const std::string& path);

} // namespace mcsim

#endif // MCSIM_TACTILE_HPP
