#include "mcsim/geometry.hpp"

#include <stdexcept>

namespace mcsim {

namespace {

constexpr double kOrthoTol = 1e-9;

void validate_rotation(const Mat3& r) {
    const Mat3 rtr = r.transposed() * r;
    const Mat3 eye = Mat3::identity();
    for (int i = 0; i < 9; ++i) {
        if (std::abs(rtr.m[static_cast<size_t>(i)] - eye.m[static_cast<size_t>(i)]) >= kOrthoTol)
            throw std::invalid_argument("RigidTransform: rotation is not orthonormal");
    }
    if (std::abs(r.determinant() - 1.0) >= kOrthoTol)
        throw std::invalid_argument("RigidTransform: rotation determinant is not +1");
}

} // namespace

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rot_(rotation), trans_(translation) {
    if (!translation.finite())
        throw std::invalid_argument("RigidTransform: non-finite translation");
    validate_rotation(rotation);
}

RigidTransform RigidTransform::inverse() const {
    const Mat3 rt = rot_.transposed();
    return RigidTransform(rt, rt * trans_ * -1.0);
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
    return RigidTransform(a.rotation() * b.rotation(),
                          a.rotation() * b.translation() + a.translation());
}

Vec3 camera_to_delta(const Vec3& p_cam, double theta_deg, double l_cm) {
    const double c = std::cos(deg_to_rad(theta_deg));
    const double s = std::sin(deg_to_rad(theta_deg));
    return {p_cam.x,
            c * p_cam.y - s * p_cam.z + l_cm,
            s * p_cam.y + c * p_cam.z};
}

Vec3 delta_to_camera(const Vec3& p_delta, double theta_deg, double l_cm) {
    const double c = std::cos(deg_to_rad(theta_deg));
    const double s = std::sin(deg_to_rad(theta_deg));
    const Vec3 q{p_delta.x, p_delta.y - l_cm, p_delta.z};
    // Transpose of the pitch rotation.
    return {q.x, c * q.y + s * q.z, -s * q.y + c * q.z};
}

RigidTransform camera_to_delta_transform(double theta_deg, double l_cm) {
    return RigidTransform(Mat3::rotation_x(theta_deg), Vec3{0.0, l_cm, 0.0});
}

} // namespace mcsim
