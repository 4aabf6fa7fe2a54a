#ifndef MCSIM_DELTA_KIN_HPP
#define MCSIM_DELTA_KIN_HPP

#include <optional>

#include "mcsim/geometry.hpp"

namespace mcsim {

/// Inverted-delta actuator dimensions, all in centimeters.
///
/// The setup ring lies in the z = 0 plane with the three proximal joints
/// spaced 120 degrees apart at base_radius; the moving platform carries its
/// joints at platform_radius. The working volume sits on the +Z side of the
/// ring. The compact (inverted) layout mounts the proximal arms pointing
/// radially inward, so proximal and distal links sweep the same volume.
///
/// Link lengths are representative defaults sized so the rated workspace box
/// (xy half-range 6 cm, z span 11 cm) is fully reachable; they are not the
/// dimensions of any particular build. The box's z placement leaves the
/// docking endgame's corrected target (measured range just under 11 cm minus
/// the 4 cm closing move, foreshortened by any residual bearing) interior to
/// the box rather than on its floor.
struct DeltaGeometry {
    double base_radius_cm = 8.0;
    double platform_radius_cm = 3.0;
    double proximal_length_cm = 10.0; // upper arm, actuated
    double distal_length_cm = 14.0;   // parallelogram rod
    double workspace_xy_halfrange_cm = 6.0;
    double workspace_z_min_cm = 4.0;
    double workspace_z_max_cm = 15.0;
    double servo_min_deg = -90.0;
    double servo_max_deg = 90.0;

    /// Throws std::invalid_argument when lengths or ranges are inconsistent.
    void validate() const;
};

/// Actuated proximal-joint angles in degrees, one per kinematic limb.
/// Zero is the arm horizontal pointing radially inward; positive tilts the
/// elbow toward the working volume (+Z).
struct JointAngles {
    double theta1_deg = 0.0;
    double theta2_deg = 0.0;
    double theta3_deg = 0.0;

    double operator[](int i) const {
        return i == 0 ? theta1_deg : (i == 1 ? theta2_deg : theta3_deg);
    }
};

/// Closed-form inverse kinematics. Per limb the target is rotated into the
/// limb plane and the circle-sphere intersection quadratic is solved; the
/// elbow-out root is always taken so the map is single-valued.
/// Returns nullopt when the quadratic has no real root or a resulting angle
/// violates the servo limits (target unreachable).
std::optional<JointAngles> inverse_kinematics(const DeltaGeometry& g, const Vec3& target);

/// Forward kinematics by three-sphere trilateration of the virtual sphere
/// centers. Of the two intersection points the one on the working (+Z
/// normal) side of the centers' plane is returned. Returns nullopt when the
/// spheres do not meet (inconsistent angles for the geometry).
std::optional<Vec3> forward_kinematics(const DeltaGeometry& g, const JointAngles& j);

/// True iff the point is inside the rated workspace box and the closed-form
/// inverse kinematics succeeds there.
bool in_workspace(const DeltaGeometry& g, const Vec3& p);

} // namespace mcsim

#endif // MCSIM_DELTA_KIN_HPP
