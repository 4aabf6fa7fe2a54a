#ifndef MCSIM_WORLD_HPP
#define MCSIM_WORLD_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mcsim/geometry.hpp"
#include "mcsim/rng.hpp"

namespace mcsim {

/// Planar pose of the mobile charger. Yaw is measured from +Y toward +X in
/// degrees and kept normalized to (-180, 180].
struct Pose2 {
    double x_cm = 0.0;
    double y_cm = 0.0;
    double yaw_deg = 0.0;
};

/// Wrap an angle to (-180, 180].
double normalize_yaw(double yaw_deg);

/// Height of the actuator center above the floor. Chosen equal to the rated
/// electrode stand height so an electrode on the stand sits vertically
/// centered in the actuator workspace.
inline constexpr double kDeltaMountHeightCm = 16.0;

/// Static scene plus the single mobile agent. Immutable value type: rotate()
/// and advance() return updated copies and never touch the electrode.
struct WorldState {
    Pose2 charger{};
    Vec3 electrode_pos{0.0, 25.0, 16.0};  // world frame, cm
    double electrode_height_cm = 16.0;
    std::uint64_t rng_seed = 0;
};

/// Standard trial scenario: charger at the origin rotated omega away from
/// facing the electrode, electrode straight up the +Y axis at range L on the
/// stand.
WorldState make_trial_world(double omega_deg, double range_cm,
                            std::uint64_t rng_seed = 0);

enum class Lighting { Bright, Normal, Dark };

/// Multiplier applied to the per-attempt miss probability.
double lighting_factor(Lighting l);

const char* to_string(Lighting l);
Lighting lighting_from_string(const std::string& s);

/// Stochastic bounding-box detector. Geometric visibility is a view cone
/// around the camera optical axis plus a planar range cutoff; within view,
/// each attempt misses independently with probability miss_prob scaled by
/// the lighting factor. The default miss probability is calibrated so the
/// standard 100-trial docking experiment lands in the low-80s percent
/// success range with no significant dependence on the starting angle.
struct DetectorModel {
    double fov_halfangle_deg = 35.0;
    double max_range_cm = 40.0;
    double miss_prob = 0.40;
    double center_noise_sigma_cm = 0.5;
    Lighting lighting = Lighting::Normal;

    double effective_miss_prob() const;
};

/// One detection attempt. bbox_center_cam and distance_cm carry values only
/// when detected is true.
struct Observation {
    bool detected = false;
    Vec3 bbox_center_cam{};   // camera frame, cm
    double distance_cm = 0.0; // planar charger-to-target range from the noisy center
};

/// Electrode position in the actuator frame of the given charger pose
/// (X right, Y down, Z forward from the actuator center).
Vec3 electrode_in_delta_frame(const WorldState& w);

/// Attempt one detection. Consumes rng draws only when the electrode is
/// geometrically visible: one uniform for the miss gate, then three
/// gaussians for the center noise.
Observation observe(const WorldState& w, const DetectorModel& d, Rng& rng);

/// Yaw increment, position unchanged.
WorldState rotate(const WorldState& w, double delta_yaw_deg);

/// Translate dist_cm along the current heading. Throws OutOfRangeError for
/// negative distances.
WorldState advance(const WorldState& w, double dist_cm);

/// Depth image with zeros marking invalid (hole) pixels. Default dimensions
/// follow the sensor's 840x480 stream.
struct DepthGrid {
    int rows = 480;
    int cols = 840;
    std::vector<double> depth_cm;  // row-major, rows*cols entries

    DepthGrid() : depth_cm(static_cast<std::size_t>(rows) * cols, 0.0) {}
    DepthGrid(int r, int c, double fill = 0.0);

    double& at(int r, int c);
    double at(int r, int c) const;
};

struct Pixel {
    int row = 0;
    int col = 0;
    bool operator==(const Pixel&) const = default;
};

/// The query pixel itself when its depth is valid, else the hole-free pixel
/// at minimum Euclidean pixel distance (ties: row-major scan order). Throws
/// AllHolesError when the grid has no valid pixel, OutOfRangeError when the
/// query lies outside the grid.
Pixel nearest_valid_depth(const DepthGrid& grid, const Pixel& query);

} // namespace mcsim

#endif // MCSIM_WORLD_HPP
