#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "stb/geometry.hpp"

using namespace stb;

TEST_CASE("compose_pose: forward moves 0.25 m along heading") {
    geom::Pose p{0, 0, 0};
    auto q = geom::compose_pose(p, geom::Action::Forward);
    CHECK(q.x == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(q.y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(q.heading == 0.0);

    geom::Pose r{1, 1, 90};
    auto s = geom::compose_pose(r, geom::Action::Forward);
    CHECK(s.x == doctest::Approx(1.0));
    CHECK(s.y == doctest::Approx(1.25));
    CHECK(s.heading == 90.0);
}

TEST_CASE("compose_pose: 24 left turns return to the original heading") {
    geom::Pose p{0, 0, 0};
    for (int i = 0; i < 24; ++i) p = geom::compose_pose(p, geom::Action::TurnLeft);
    CHECK(p.heading == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p.x == 0.0);
    CHECK(p.y == 0.0);
}

TEST_CASE("compose_pose: stop is the identity") {
    geom::Pose p{3.5, -2.0, 195};
    auto q = geom::compose_pose(p, geom::Action::Stop);
    CHECK(q.x == p.x);
    CHECK(q.y == p.y);
    CHECK(q.heading == p.heading);
}

TEST_CASE("compose_pose: k lefts then k rights restore the pose exactly") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        geom::Pose p{0, 0, 15.0 * (int)(rng() % 24)};
        geom::Pose q = p;
        int k = 1 + static_cast<int>(rng() % 30);
        for (int i = 0; i < k; ++i) q = geom::compose_pose(q, geom::Action::TurnLeft);
        for (int i = 0; i < k; ++i) q = geom::compose_pose(q, geom::Action::TurnRight);
        CHECK(q.heading == p.heading);
    }
}

TEST_CASE("normalize_heading wraps into [0, 360)") {
    CHECK(geom::normalize_heading(360.0) == 0.0);
    CHECK(geom::normalize_heading(-15.0) == doctest::Approx(345.0));
    CHECK(geom::normalize_heading(725.0) == doctest::Approx(5.0));
    CHECK(geom::normalize_heading(0.0) == 0.0);
}

TEST_CASE("backproject_view: on-axis ray lands at (depth, 0)") {
    Eigen::MatrixXd depth(1, 1);
    depth(0, 0) = 2.0;
    auto res = geom::backproject_view(depth, geom::ViewRay::for_view(0), {});
    REQUIRE(res.points.size() == 1);
    CHECK(res.points[0].x() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(res.points[0].y() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("backproject_view: view 3 (azimuth 90, counter-clockwise) lands at (0, +2)") {
    Eigen::MatrixXd depth(1, 1);
    depth(0, 0) = 2.0;
    auto res = geom::backproject_view(depth, geom::ViewRay::for_view(3), {});
    REQUIRE(res.points.size() == 1);
    CHECK(res.points[0].x() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(res.points[0].y() == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("backproject_view: invalid depths are omitted and counted") {
    Eigen::MatrixXd depth(1, 3);
    depth << 2.0, 0.0, -1.0;
    auto res = geom::backproject_view(depth, geom::ViewRay::for_view(0), {});
    CHECK(res.points.size() == 1);
    CHECK(res.dropped_invalid == 2);
}

TEST_CASE("backproject_view: out-of-band heights are dropped") {
    // P=3 rows: row 0 has elevation atan(tan(45)*2/3) ~ 33.7 deg; at depth 2
    // the implied height 1 + 2*tan(elev) ~ 2.33 leaves the [0.2, 1.8] band.
    Eigen::MatrixXd depth = Eigen::MatrixXd::Constant(3, 3, 2.0);
    auto res = geom::backproject_view(depth, geom::ViewRay::for_view(0), {});
    CHECK(res.dropped_height == 6);  // top and bottom rows
    CHECK(res.points.size() == 3);   // middle row (elevation 0) survives
}

TEST_CASE("backproject_view: point range equals source depth") {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> d(0.1, 8.0);
    for (int trial = 0; trial < 20; ++trial) {
        int P = 1 + 2 * static_cast<int>(rng() % 4);
        Eigen::MatrixXd depth(P, P);
        for (int r = 0; r < P; ++r)
            for (int c = 0; c < P; ++c) depth(r, c) = d(rng);
        int view = static_cast<int>(rng() % 12);
        auto res = geom::backproject_view(depth, geom::ViewRay::for_view(view), {});
        for (std::size_t k = 0; k < res.points.size(); ++k) {
            double src = depth(res.pixels[k].first, res.pixels[k].second);
            CHECK(res.points[k].norm() == doctest::Approx(src).epsilon(1e-9));
        }
    }
}

TEST_CASE("world_to_cell: documented examples") {
    geom::GridSpec spec;  // 11x11 @ 1 m
    auto c0 = geom::world_to_cell({0.0, 0.0}, spec);
    REQUIRE(c0.has_value());
    CHECK(c0->first == 5);
    CHECK(c0->second == 5);

    auto c1 = geom::world_to_cell({1.4, -0.6}, spec);
    REQUIRE(c1.has_value());
    CHECK(c1->first == 6);
    CHECK(c1->second == 4);

    CHECK(!geom::world_to_cell({6.0, 0.0}, spec).has_value());
}

TEST_CASE("world_to_cell: origin is always the center cell") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        geom::GridSpec spec;
        spec.U = 3 + 2 * static_cast<int>(rng() % 6);
        spec.V = 3 + 2 * static_cast<int>(rng() % 6);
        spec.cell_res = 0.25 + 0.25 * static_cast<int>(rng() % 8);
        auto c = geom::world_to_cell({0.0, 0.0}, spec);
        REQUIRE(c.has_value());
        CHECK(c->first == spec.center_u());
        CHECK(c->second == spec.center_v());
    }
}

TEST_CASE("world_to_cell: cell-center round trip recovers every index") {
    geom::GridSpec spec;
    spec.U = 9;
    spec.V = 7;
    spec.cell_res = 0.5;
    for (int u = 0; u < spec.U; ++u)
        for (int v = 0; v < spec.V; ++v) {
            auto c = geom::world_to_cell(geom::cell_center(u, v, spec), spec);
            REQUIRE(c.has_value());
            CHECK(c->first == u);
            CHECK(c->second == v);
        }
}

TEST_CASE("world/ego transforms are inverse of each other") {
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> d(-10.0, 10.0);
    for (int trial = 0; trial < 50; ++trial) {
        geom::Pose pose{d(rng), d(rng), 15.0 * (int)(rng() % 24)};
        Eigen::Vector2d w{d(rng), d(rng)};
        Eigen::Vector2d back = geom::ego_to_world(geom::world_to_ego(w, pose), pose);
        CHECK(back.x() == doctest::Approx(w.x()).epsilon(1e-12));
        CHECK(back.y() == doctest::Approx(w.y()).epsilon(1e-12));
    }
}

TEST_CASE("column_azimuth spans the half field of view") {
    // leftmost/rightmost columns approach +-hfov/2 for large P
    double a0 = geom::column_azimuth(0, 101, 90.0);
    double a_last = geom::column_azimuth(100, 101, 90.0);
    CHECK(a0 < 0);
    CHECK(a_last > 0);
    CHECK(a_last == doctest::Approx(-a0).epsilon(1e-12));
    CHECK(geom::column_azimuth(50, 101, 90.0) == doctest::Approx(0.0));
}
