#include "mcsim/delta_kin.hpp"

#include <cmath>
#include <stdexcept>

namespace mcsim {

namespace {

// Limb axis directions, 120 degrees apart around the ring.
constexpr double kLimbAnglesDeg[3] = {0.0, 120.0, 240.0};

struct LimbFrame {
    double ux, uy; // radial unit vector of the limb
};

LimbFrame limb_frame(int i) {
    const double a = deg_to_rad(kLimbAnglesDeg[i]);
    return {std::cos(a), std::sin(a)};
}

/// Solve one limb: angle of the proximal arm so the distal rod spans from
/// elbow to wrist. `a` is the radial and `c` the vertical wrist offset from
/// the shoulder in the limb plane, `b` the out-of-plane offset.
std::optional<double> solve_limb(const DeltaGeometry& g, double a, double b, double c) {
    const double la = g.proximal_length_cm;
    const double lb = g.distal_length_cm;
    // Elbow at la*(-cos t, 0, sin t) relative to the shoulder (arm inward):
    //   (a + la cos t)^2 + b^2 + (c - la sin t)^2 = lb^2
    //   =>  c sin t - a cos t = G
    const double G = (a * a + b * b + c * c + la * la - lb * lb) / (2.0 * la);
    const double rho = std::sqrt(a * a + c * c);
    if (rho < 1e-12) return std::nullopt; // wrist on the shoulder axis
    const double ratio = G / rho;
    if (ratio < -1.0 || ratio > 1.0) return std::nullopt;
    // Elbow-out branch of t = atan2(c, -a) -/+ acos(ratio).
    return rad_to_deg(std::atan2(c, -a) - std::acos(ratio));
}

} // namespace

void DeltaGeometry::validate() const {
    if (!(base_radius_cm > 0 && platform_radius_cm > 0 && proximal_length_cm > 0 &&
          distal_length_cm > 0))
        throw std::invalid_argument("DeltaGeometry: all lengths must be positive");
    if (!(distal_length_cm > std::abs(base_radius_cm - platform_radius_cm)))
        throw std::invalid_argument(
            "DeltaGeometry: distal link must exceed the base/platform radius gap");
    if (!(workspace_xy_halfrange_cm > 0) || !(workspace_z_max_cm > workspace_z_min_cm))
        throw std::invalid_argument("DeltaGeometry: empty workspace box");
    if (!(servo_max_deg > servo_min_deg))
        throw std::invalid_argument("DeltaGeometry: empty servo range");
}

std::optional<JointAngles> inverse_kinematics(const DeltaGeometry& g, const Vec3& target) {
    if (!target.finite()) return std::nullopt;
    const double dr = g.platform_radius_cm - g.base_radius_cm;
    double theta[3];
    for (int i = 0; i < 3; ++i) {
        const LimbFrame f = limb_frame(i);
        // Wrist relative to shoulder: target + (platform_r - base_r) * u.
        const double vx = target.x + dr * f.ux;
        const double vy = target.y + dr * f.uy;
        const double a = vx * f.ux + vy * f.uy;        // radial
        const double b = -vx * f.uy + vy * f.ux;       // tangential
        const auto t = solve_limb(g, a, b, target.z);
        if (!t) return std::nullopt;
        if (*t < g.servo_min_deg || *t > g.servo_max_deg) return std::nullopt;
        theta[i] = *t;
    }
    return JointAngles{theta[0], theta[1], theta[2]};
}

std::optional<Vec3> forward_kinematics(const DeltaGeometry& g, const JointAngles& j) {
    for (int i = 0; i < 3; ++i)
        if (!std::isfinite(j[i])) return std::nullopt;

    // Virtual sphere centers: elbow shifted inward by the platform radius.
    // The end effector is then equidistant (distal length) from all three.
    Vec3 centers[3];
    for (int i = 0; i < 3; ++i) {
        const LimbFrame f = limb_frame(i);
        const double t = deg_to_rad(j[i]);
        const double radial =
            g.base_radius_cm - g.platform_radius_cm - g.proximal_length_cm * std::cos(t);
        centers[i] = Vec3{radial * f.ux, radial * f.uy, g.proximal_length_cm * std::sin(t)};
    }

    // Trilateration in the local frame of the three centers.
    const Vec3 e12 = centers[1] - centers[0];
    const Vec3 e13 = centers[2] - centers[0];
    const double d = e12.norm();
    if (d < 1e-12) return std::nullopt;
    const Vec3 ex = e12 / d;
    const double i1 = ex.dot(e13);
    const Vec3 ey_raw = e13 - i1 * ex;
    const double ey_len = ey_raw.norm();
    if (ey_len < 1e-12) return std::nullopt; // collinear centers
    const Vec3 ey = ey_raw / ey_len;
    Vec3 ez = ex.cross(ey);
    // Orient the plane normal toward the working side.
    if (ez.z < 0) ez = ez * -1.0;

    const double lb2 = g.distal_length_cm * g.distal_length_cm;
    const double px = d / 2.0;
    const double j2 = ey.dot(e13);
    const double py = (i1 * i1 + j2 * j2 - 2.0 * i1 * px) / (2.0 * j2);
    const double h2 = lb2 - px * px - py * py;
    if (h2 < 0) return std::nullopt;
    return centers[0] + px * ex + py * ey + std::sqrt(h2) * ez;
}

bool in_workspace(const DeltaGeometry& g, const Vec3& p) {
    if (!p.finite()) return false;
    if (std::abs(p.x) > g.workspace_xy_halfrange_cm) return false;
    if (std::abs(p.y) > g.workspace_xy_halfrange_cm) return false;
    if (p.z < g.workspace_z_min_cm || p.z > g.workspace_z_max_cm) return false;
    return inverse_kinematics(g, p).has_value();
}

} // namespace mcsim
