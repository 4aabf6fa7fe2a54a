#include <doctest.h>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mcsim/delta_kin.hpp"
#include "mcsim/rng.hpp"

using namespace mcsim;

namespace {

double z_mid(const DeltaGeometry& g) {
    return 0.5 * (g.workspace_z_min_cm + g.workspace_z_max_cm);
}

// Independent root finder for one limb: distance residual between the elbow
// at angle t and the wrist, scanned and bisected. Returns every root in the
// servo range; the mechanism always takes the smallest.
std::vector<double> limb_roots_by_bisection(const DeltaGeometry& g, const Vec3& target,
                                            double azimuth_deg) {
    const double ar = deg_to_rad(azimuth_deg);
    const double ux = std::cos(ar), uy = std::sin(ar);
    const Vec3 wrist{target.x + g.platform_radius_cm * ux, target.y + g.platform_radius_cm * uy,
                     target.z};
    auto residual = [&](double t_deg) {
        const double t = deg_to_rad(t_deg);
        const double radial = g.base_radius_cm - g.proximal_length_cm * std::cos(t);
        const Vec3 elbow{radial * ux, radial * uy, g.proximal_length_cm * std::sin(t)};
        return (elbow - wrist).norm() - g.distal_length_cm;
    };
    std::vector<double> roots;
    const double step = 0.05;
    double prev = residual(g.servo_min_deg);
    for (double t = g.servo_min_deg + step; t <= g.servo_max_deg + 1e-12; t += step) {
        double cur = residual(t);
        if ((prev < 0) != (cur < 0)) {
            double lo = t - step, hi = t;
            for (int it = 0; it < 80; ++it) {
                double mid = 0.5 * (lo + hi);
                if ((residual(lo) < 0) != (residual(mid) < 0))
                    hi = mid;
                else
                    lo = mid;
            }
            roots.push_back(0.5 * (lo + hi));
        }
        prev = cur;
    }
    return roots;
}

}  // namespace

TEST_CASE("ik: symmetric center target gives three equal angles") {
    DeltaGeometry g;
    auto j = inverse_kinematics(g, Vec3{0, 0, z_mid(g)});
    REQUIRE(j.has_value());
    CHECK(j->theta1_deg == doctest::Approx(j->theta2_deg).epsilon(1e-12));
    CHECK(j->theta2_deg == doctest::Approx(j->theta3_deg).epsilon(1e-12));
}

TEST_CASE("ik matches a per-limb bisection oracle") {
    DeltaGeometry g;
    const Vec3 target{2, 3, 8};
    auto j = inverse_kinematics(g, target);
    REQUIRE(j.has_value());
    const double azimuths[3] = {0.0, 120.0, 240.0};
    for (int i = 0; i < 3; ++i) {
        auto roots = limb_roots_by_bisection(g, target, azimuths[i]);
        REQUIRE(!roots.empty());
        CHECK(std::abs((*j)[i] - roots.front()) < 1e-6);
    }
}

TEST_CASE("ik: far-away target is unreachable") {
    DeltaGeometry g;
    CHECK(!inverse_kinematics(g, Vec3{0, 0, 10 * g.workspace_z_max_cm}).has_value());
}

TEST_CASE("ik: non-finite target is unreachable") {
    DeltaGeometry g;
    CHECK(!inverse_kinematics(g, Vec3{std::nan(""), 0, 8}).has_value());
}

TEST_CASE("fk: equal angles land on the central axis") {
    DeltaGeometry g;
    auto p = forward_kinematics(g, JointAngles{-20, -20, -20});
    REQUIRE(p.has_value());
    CHECK(std::abs(p->x) < 1e-9);
    CHECK(std::abs(p->y) < 1e-9);
}

TEST_CASE("fk inverts ik on a specific target") {
    DeltaGeometry g;
    const Vec3 target{2, 3, 8};
    auto j = inverse_kinematics(g, target);
    REQUIRE(j.has_value());
    auto p = forward_kinematics(g, *j);
    REQUIRE(p.has_value());
    CHECK((*p - target).norm() < 1e-9);
}

TEST_CASE("fk round-trips ik over 1000 seeded workspace points") {
    DeltaGeometry g;
    Rng rng(2024);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        Vec3 target{rng.uniform(-g.workspace_xy_halfrange_cm, g.workspace_xy_halfrange_cm),
                    rng.uniform(-g.workspace_xy_halfrange_cm, g.workspace_xy_halfrange_cm),
                    rng.uniform(g.workspace_z_min_cm, g.workspace_z_max_cm)};
        auto j = inverse_kinematics(g, target);
        REQUIRE(j.has_value());
        auto p = forward_kinematics(g, *j);
        REQUIRE(p.has_value());
        worst = std::max(worst, (*p - target).norm());
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("ik: rotating the target 120 degrees permutes the angles cyclically") {
    DeltaGeometry g;
    Rng rng(77);
    for (int i = 0; i < 50; ++i) {
        Vec3 p{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0), rng.uniform(5.0, 14.0)};
        auto j = inverse_kinematics(g, p);
        if (!j) continue;
        const double c = std::cos(deg_to_rad(120.0)), s = std::sin(deg_to_rad(120.0));
        Vec3 q{c * p.x - s * p.y, s * p.x + c * p.y, p.z};
        auto k = inverse_kinematics(g, q);
        REQUIRE(k.has_value());
        CHECK(std::abs(k->theta1_deg - j->theta3_deg) < 1e-9);
        CHECK(std::abs(k->theta2_deg - j->theta1_deg) < 1e-9);
        CHECK(std::abs(k->theta3_deg - j->theta2_deg) < 1e-9);
    }
}

TEST_CASE("ik is deterministic bit for bit") {
    DeltaGeometry g;
    const Vec3 target{1.25, -4.5, 11.0};
    auto a = inverse_kinematics(g, target);
    auto b = inverse_kinematics(g, target);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(a->theta1_deg == b->theta1_deg);
    CHECK(a->theta2_deg == b->theta2_deg);
    CHECK(a->theta3_deg == b->theta3_deg);
}

TEST_CASE("the full workspace box is reachable, corners included") {
    DeltaGeometry g;
    const double h = g.workspace_xy_halfrange_cm;
    for (double x : {-h, h})
        for (double y : {-h, h})
            for (double z : {g.workspace_z_min_cm, g.workspace_z_max_cm}) {
                auto j = inverse_kinematics(g, Vec3{x, y, z});
                CHECK_MESSAGE(j.has_value(), "corner (", x, ",", y, ",", z, ")");
                if (j) {
                    for (int i = 0; i < 3; ++i) {
                        CHECK((*j)[i] >= g.servo_min_deg);
                        CHECK((*j)[i] <= g.servo_max_deg);
                    }
                }
            }
}

TEST_CASE("in_workspace: center in, beyond-range out, boundary follows ik") {
    DeltaGeometry g;
    CHECK(in_workspace(g, Vec3{0, 0, z_mid(g)}));
    CHECK(!in_workspace(g, Vec3{7, 0, z_mid(g)}));
    const Vec3 edge{6, 0, z_mid(g)};
    CHECK(in_workspace(g, edge) == inverse_kinematics(g, edge).has_value());
    CHECK(!in_workspace(g, Vec3{0, 0, g.workspace_z_min_cm - 0.01}));
    CHECK(!in_workspace(g, Vec3{0, 0, g.workspace_z_max_cm + 0.01}));
}

TEST_CASE("geometry validation rejects bad configurations") {
    DeltaGeometry g;
    g.proximal_length_cm = -1;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = DeltaGeometry{};
    g.distal_length_cm = 4.0;  // smaller than the 5 cm radius gap
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = DeltaGeometry{};
    g.workspace_z_min_cm = 10;
    g.workspace_z_max_cm = 5;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    CHECK_NOTHROW(DeltaGeometry{}.validate());
}

TEST_CASE("fk reports no intersection for impossible configurations") {
    DeltaGeometry g;
    g.base_radius_cm = 8;
    g.platform_radius_cm = 7.9;
    g.proximal_length_cm = 9;
    g.distal_length_cm = 0.2;
    CHECK(!forward_kinematics(g, JointAngles{0, 0, 0}).has_value());
    CHECK(!forward_kinematics(g, JointAngles{std::nan(""), 0, 0}).has_value());
}
