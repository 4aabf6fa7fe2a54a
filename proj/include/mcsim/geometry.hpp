#ifndef MCSIM_GEOMETRY_HPP
#define MCSIM_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <cstddef>

namespace mcsim {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// 3D point/vector, components in centimeters.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const { return *this / norm(); }
    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    double& at(int r, int c) { return m[static_cast<std::size_t>(r * 3 + c)]; }
    double at(int r, int c) const { return m[static_cast<std::size_t>(r * 3 + c)]; }

    static Mat3 identity() { return Mat3{}; }

    /// Rotation about +X by `deg`; maps Y toward Z for positive angles.
    static Mat3 rotation_x(double deg) {
        const double c = std::cos(deg_to_rad(deg)), s = std::sin(deg_to_rad(deg));
        return Mat3{{1, 0, 0, 0, c, -s, 0, s, c}};
    }
    static Mat3 rotation_y(double deg) {
        const double c = std::cos(deg_to_rad(deg)), s = std::sin(deg_to_rad(deg));
        return Mat3{{c, 0, s, 0, 1, 0, -s, 0, c}};
    }
    static Mat3 rotation_z(double deg) {
        const double c = std::cos(deg_to_rad(deg)), s = std::sin(deg_to_rad(deg));
        return Mat3{{c, -s, 0, s, c, 0, 0, 0, 1}};
    }

    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += at(i, k) * o.at(k, j);
                r.at(i, j) = s;
            }
        return r;
    }
    Mat3 transposed() const {
        return Mat3{{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
    }
    double determinant() const {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    }
};

/// Rigid frame change p -> R*p + t. The rotation is validated to be
/// orthonormal with det +1 on construction; apply() performs no checks.
class RigidTransform {
public:
    RigidTransform() = default;
    RigidTransform(const Mat3& rotation, const Vec3& translation);

    const Mat3& rotation() const { return rot_; }
    const Vec3& translation() const { return trans_; }

    Vec3 apply(const Vec3& p) const { return rot_ * p + trans_; }
    RigidTransform inverse() const;

    static RigidTransform identity() { return RigidTransform{}; }

private:
    Mat3 rot_ = Mat3::identity();
    Vec3 trans_{};
};

RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

inline constexpr double kCameraPitchDegDefault = -50.0;
inline constexpr double kCameraYOffsetCmDefault = -19.0;

/// Camera-frame point to actuator-frame point: rotate about the shared X
/// axis by `theta_deg` (pitch) and translate `l_cm` along the actuator Y.
Vec3 camera_to_delta(const Vec3& p_cam, double theta_deg = kCameraPitchDegDefault,
                     double l_cm = kCameraYOffsetCmDefault);

/// Inverse of camera_to_delta with the same parameters.
Vec3 delta_to_camera(const Vec3& p_delta, double theta_deg = kCameraPitchDegDefault,
                     double l_cm = kCameraYOffsetCmDefault);

/// The same frame change packaged as a RigidTransform.
RigidTransform camera_to_delta_transform(double theta_deg = kCameraPitchDegDefault,
                                         double l_cm = kCameraYOffsetCmDefault);

} // namespace mcsim

#endif // MCSIM_GEOMETRY_HPP
