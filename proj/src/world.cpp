#include "mcsim/world.hpp"

#include <cmath>
#include <limits>

#include "mcsim/errors.hpp"

namespace mcsim {

double normalize_yaw(double yaw_deg) {
    double y = std::fmod(yaw_deg, 360.0);
    if (y <= -180.0) y += 360.0;
    if (y > 180.0) y -= 360.0;
    return y;
}

WorldState make_trial_world(double omega_deg, double range_cm, std::uint64_t rng_seed) {
    WorldState w;
    w.charger = Pose2{0.0, 0.0, normalize_yaw(omega_deg)};
    w.electrode_pos = Vec3{0.0, range_cm, w.electrode_height_cm};
    w.rng_seed = rng_seed;
    return w;
}

double lighting_factor(Lighting l) {
    switch (l) {
        case Lighting::Bright: return 0.7;
        case Lighting::Normal: return 1.0;
        case Lighting::Dark: return 1.8;
    }
    return 1.0;
}

const char* to_string(Lighting l) {
    switch (l) {
        case Lighting::Bright: return "bright";
        case Lighting::Normal: return "normal";
        case Lighting::Dark: return "dark";
    }
    return "normal";
}

Lighting lighting_from_string(const std::string& s) {
    if (s == "bright") return Lighting::Bright;
    if (s == "normal") return Lighting::Normal;
    if (s == "dark") return Lighting::Dark;
    throw OutOfRangeError("unknown lighting level: " + s);
}

double DetectorModel::effective_miss_prob() const {
    double p = miss_prob * lighting_factor(lighting);
    if (p < 0.0) return 0.0;
    if (p > 1.0) return 1.0;
    return p;
}

Vec3 electrode_in_delta_frame(const WorldState& w) {
    const double yaw = deg_to_rad(w.charger.yaw_deg);
    const double hx = std::sin(yaw), hy = std::cos(yaw);  // heading
    const double rx = std::cos(yaw), ry = -std::sin(yaw); // right
    const double dx = w.electrode_pos.x - w.charger.x_cm;
    const double dy = w.electrode_pos.y - w.charger.y_cm;
    const double dz = w.electrode_pos.z - kDeltaMountHeightCm;
    // Actuator axes: X right, Y down, Z forward.
    return Vec3{dx * rx + dy * ry, -dz, dx * hx + dy * hy};
}

Observation observe(const WorldState& w, const DetectorModel& d, Rng& rng) {
    const Vec3 p_delta = electrode_in_delta_frame(w);
    const Vec3 p_cam = delta_to_camera(p_delta);

    const double planar = std::hypot(p_delta.x, p_delta.z);
    const double range = p_cam.norm();
    if (range < 1e-12) return Observation{};
    const double off_axis_deg = rad_to_deg(std::acos(p_cam.z / range));
    if (off_axis_deg > d.fov_halfangle_deg || planar > d.max_range_cm)
        return Observation{};

    if (rng.uniform01() < d.effective_miss_prob()) return Observation{};

    Observation obs;
    obs.detected = true;
    obs.bbox_center_cam = p_cam + Vec3{rng.gaussian(0.0, d.center_noise_sigma_cm),
                                       rng.gaussian(0.0, d.center_noise_sigma_cm),
                                       rng.gaussian(0.0, d.center_noise_sigma_cm)};
    const Vec3 noisy_delta = camera_to_delta(obs.bbox_center_cam);
    obs.distance_cm = std::hypot(noisy_delta.x, noisy_delta.z);
    return obs;
}

WorldState rotate(const WorldState& w, double delta_yaw_deg) {
    WorldState out = w;
    out.charger.yaw_deg = normalize_yaw(w.charger.yaw_deg + delta_yaw_deg);
    return out;
}

WorldState advance(const WorldState& w, double dist_cm) {
    if (!(dist_cm >= 0.0))
        throw OutOfRangeError("advance: distance must be non-negative");
    const double yaw = deg_to_rad(w.charger.yaw_deg);
    WorldState out = w;
    out.charger.x_cm += dist_cm * std::sin(yaw);
    out.charger.y_cm += dist_cm * std::cos(yaw);
    return out;
}

DepthGrid::DepthGrid(int r, int c, double fill) : rows(r), cols(c) {
    if (r <= 0 || c <= 0) throw OutOfRangeError("DepthGrid: dimensions must be positive");
    depth_cm.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill);
}

double& DepthGrid::at(int r, int c) {
    if (r < 0 || r >= rows || c < 0 || c >= cols)
        throw OutOfRangeError("DepthGrid: pixel out of bounds");
    return depth_cm[static_cast<std::size_t>(r) * cols + c];
}

double DepthGrid::at(int r, int c) const {
    if (r < 0 || r >= rows || c < 0 || c >= cols)
        throw OutOfRangeError("DepthGrid: pixel out of bounds");
    return depth_cm[static_cast<std::size_t>(r) * cols + c];
}

Pixel nearest_valid_depth(const DepthGrid& grid, const Pixel& query) {
    if (query.row < 0 || query.row >= grid.rows || query.col < 0 || query.col >= grid.cols)
        throw OutOfRangeError("nearest_valid_depth: query outside the grid");
    if (grid.at(query.row, query.col) != 0.0) return query;

    // Expanding square rings. A ring at Chebyshev radius k holds pixels with
    // Euclidean distance in [k, k*sqrt(2)], so after the first hit the scan
    // must continue until the ring radius alone exceeds the best distance.
    long best_d2 = std::numeric_limits<long>::max();
    Pixel best{};
    const int max_radius = std::max(std::max(query.row, grid.rows - 1 - query.row),
                                    std::max(query.col, grid.cols - 1 - query.col));
    auto consider = [&](int r, int c) {
        if (r < 0 || r >= grid.rows || c < 0 || c >= grid.cols) return;
        if (grid.at(r, c) == 0.0) return;
        const long dr = r - query.row, dc = c - query.col;
        const long d2 = dr * dr + dc * dc;
        if (d2 < best_d2 || (d2 == best_d2 && (r < best.row || (r == best.row && c < best.col)))) {
            best_d2 = d2;
            best = Pixel{r, c};
        }
    };
    for (int k = 1; k <= max_radius; ++k) {
        if (best_d2 != std::numeric_limits<long>::max() &&
            static_cast<long>(k) * k > best_d2)
            break;
        for (int c = query.col - k; c <= query.col + k; ++c) {
            consider(query.row - k, c);
            consider(query.row + k, c);
        }
        for (int r = query.row - k + 1; r <= query.row + k - 1; ++r) {
            consider(r, query.col - k);
            consider(r, query.col + k);
        }
    }
    if (best_d2 == std::numeric_limits<long>::max())
        throw AllHolesError("nearest_valid_depth: depth grid contains no valid pixel");
    return best;
}

} // namespace mcsim
