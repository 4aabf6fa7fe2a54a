#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mcsim/geometry.hpp"
#include "mcsim/rng.hpp"

using namespace mcsim;

namespace {

// Independent oracle: full 4x4 homogeneous multiply, built from scratch.
Vec3 homogeneous_oracle(const Vec3& p, double theta_deg, double l_cm) {
    const double c = std::cos(deg_to_rad(theta_deg));
    const double s = std::sin(deg_to_rad(theta_deg));
    const double H[4][4] = {
        {1, 0, 0, 0},
        {0, c, -s, l_cm},
        {0, s, c, 0},
        {0, 0, 0, 1},
    };
    const double in[4] = {p.x, p.y, p.z, 1.0};
    double out[4] = {0, 0, 0, 0};
    for (int r = 0; r < 4; ++r)
        for (int k = 0; k < 4; ++k) out[r] += H[r][k] * in[k];
    return {out[0], out[1], out[2]};
}

RigidTransform random_transform(Rng& rng) {
    Mat3 r = Mat3::rotation_z(rng.uniform(-180.0, 180.0)) *
             Mat3::rotation_y(rng.uniform(-90.0, 90.0)) *
             Mat3::rotation_x(rng.uniform(-180.0, 180.0));
    Vec3 t{rng.uniform(-30.0, 30.0), rng.uniform(-30.0, 30.0), rng.uniform(-30.0, 30.0)};
    return RigidTransform(r, t);
}

Vec3 random_point(Rng& rng, double half = 50.0) {
    return {rng.uniform(-half, half), rng.uniform(-half, half), rng.uniform(-half, half)};
}

}  // namespace

TEST_CASE("apply: identity maps points to themselves") {
    auto t = RigidTransform::identity();
    Vec3 p{3, 4, 5};
    Vec3 q = t.apply(p);
    CHECK(q.x == 3.0);
    CHECK(q.y == 4.0);
    CHECK(q.z == 5.0);
}

TEST_CASE("apply: pure translation moves the origin to the offset") {
    RigidTransform t(Mat3::identity(), Vec3{0, -19, 0});
    Vec3 q = t.apply(Vec3{0, 0, 0});
    CHECK(q.x == 0.0);
    CHECK(q.y == -19.0);
    CHECK(q.z == 0.0);
}

TEST_CASE("apply: 90 degree rotation about Z permutes the axes") {
    RigidTransform t(Mat3::rotation_z(90.0), Vec3{0, 0, 0});
    Vec3 q = t.apply(Vec3{1, 0, 0});
    CHECK(q.x == doctest::Approx(0).scale(1));
    CHECK(q.y == doctest::Approx(1));
    CHECK(q.z == doctest::Approx(0).scale(1));
}

TEST_CASE("RigidTransform rejects a non-orthonormal rotation") {
    Mat3 bad = Mat3::identity();
    bad.at(0, 0) = 2.0;
    CHECK_THROWS_AS(RigidTransform(bad, Vec3{0, 0, 0}), std::invalid_argument);
    Mat3 reflect = Mat3::identity();
    reflect.at(2, 2) = -1.0;  // det = -1, orthonormal but not a rotation
    CHECK_THROWS_AS(RigidTransform(reflect, Vec3{0, 0, 0}), std::invalid_argument);
}

TEST_CASE("camera_to_delta: zero input lands on the Y offset") {
    Vec3 q = camera_to_delta(Vec3{0, 0, 0});
    CHECK(q.x == 0.0);
    CHECK(q.y == -19.0);
    CHECK(q.z == 0.0);
}

TEST_CASE("camera_to_delta: zero angle and offset is the identity") {
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        Vec3 p = random_point(rng);
        Vec3 q = camera_to_delta(p, 0.0, 0.0);
        CHECK(q.x == doctest::Approx(p.x).epsilon(1e-15));
        CHECK(q.y == doctest::Approx(p.y).epsilon(1e-15));
        CHECK(q.z == doctest::Approx(p.z).epsilon(1e-15));
    }
}

TEST_CASE("camera_to_delta matches the homogeneous matrix oracle") {
    Vec3 p{10, 5, 20};
    Vec3 want = homogeneous_oracle(p, -50.0, -19.0);
    Vec3 got = camera_to_delta(p);
    CHECK(std::abs(got.x - want.x) < 1e-12);
    CHECK(std::abs(got.y - want.y) < 1e-12);
    CHECK(std::abs(got.z - want.z) < 1e-12);
}

TEST_CASE("camera_to_delta matches the oracle on 1000 random points") {
    Rng rng(42);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        Vec3 p = random_point(rng);
        Vec3 want = homogeneous_oracle(p, -50.0, -19.0);
        Vec3 got = camera_to_delta(p);
        worst = std::max({worst, std::abs(got.x - want.x), std::abs(got.y - want.y),
                          std::abs(got.z - want.z)});
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("camera_to_delta is rigid: pairwise distances survive") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        Vec3 p = random_point(rng);
        Vec3 q = random_point(rng);
        double before = (p - q).norm();
        double after = (camera_to_delta(p) - camera_to_delta(q)).norm();
        CHECK(std::abs(before - after) < 1e-9);
    }
}

TEST_CASE("camera_to_delta leaves the X component untouched") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        Vec3 p = random_point(rng);
        CHECK(camera_to_delta(p).x == p.x);
    }
}

TEST_CASE("delta_to_camera inverts camera_to_delta") {
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        Vec3 p = random_point(rng);
        Vec3 back = delta_to_camera(camera_to_delta(p));
        CHECK(std::abs(back.x - p.x) < 1e-12);
        CHECK(std::abs(back.y - p.y) < 1e-12);
        CHECK(std::abs(back.z - p.z) < 1e-12);
    }
}

TEST_CASE("camera_to_delta_transform agrees with the direct formula") {
    RigidTransform t = camera_to_delta_transform(-50.0, -19.0);
    Rng rng(9);
    for (int i = 0; i < 100; ++i) {
        Vec3 p = random_point(rng);
        Vec3 a = t.apply(p);
        Vec3 b = camera_to_delta(p);
        CHECK(std::abs(a.x - b.x) < 1e-12);
        CHECK(std::abs(a.y - b.y) < 1e-12);
        CHECK(std::abs(a.z - b.z) < 1e-12);
    }
}

TEST_CASE("compose: identity is neutral") {
    Rng rng(13);
    RigidTransform t = random_transform(rng);
    RigidTransform c = compose(RigidTransform::identity(), t);
    Rng prng(14);
    for (int i = 0; i < 50; ++i) {
        Vec3 p = random_point(prng);
        Vec3 a = c.apply(p);
        Vec3 b = t.apply(p);
        CHECK(std::abs(a.x - b.x) < 1e-9);
        CHECK(std::abs(a.y - b.y) < 1e-9);
        CHECK(std::abs(a.z - b.z) < 1e-9);
    }
}

TEST_CASE("compose: a transform against its inverse is the identity") {
    Rng rng(17);
    RigidTransform t = random_transform(rng);
    RigidTransform c = compose(t, t.inverse());
    Rng prng(18);
    for (int i = 0; i < 50; ++i) {
        Vec3 p = random_point(prng);
        Vec3 a = c.apply(p);
        CHECK(std::abs(a.x - p.x) < 1e-9);
        CHECK(std::abs(a.y - p.y) < 1e-9);
        CHECK(std::abs(a.z - p.z) < 1e-9);
    }
}

TEST_CASE("compose agrees with double application on 100 random points") {
    Rng rng(21);
    RigidTransform a = random_transform(rng);
    RigidTransform b = random_transform(rng);
    RigidTransform c = compose(a, b);
    Rng prng(22);
    for (int i = 0; i < 100; ++i) {
        Vec3 p = random_point(prng);
        Vec3 got = c.apply(p);
        Vec3 want = a.apply(b.apply(p));
        CHECK(std::abs(got.x - want.x) < 1e-9);
        CHECK(std::abs(got.y - want.y) < 1e-9);
        CHECK(std::abs(got.z - want.z) < 1e-9);
    }
}
