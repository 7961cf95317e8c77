#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "carcal/camera.hpp"
#include "carcal/gnss.hpp"
#include "carcal/lidar.hpp"
#include "carcal/radar.hpp"
#include "carcal/sim.hpp"

using namespace carcal;
using sim::RoutePrimitive;
using sim::ScenarioSpec;
using sim::TruthTrajectory;

namespace {

RoutePrimitive straight(double dur, double speed) {
    return {RoutePrimitive::Kind::straight, dur, speed, 0.0};
}

RoutePrimitive arc(double dur, double speed, double radius) {
    return {RoutePrimitive::Kind::arc, dur, speed, radius};
}

ScenarioSpec base_spec() {
    ScenarioSpec spec;
    spec.route = {straight(60.0, 10.0)};
    spec.seed = 7;
    return spec;
}

}  // namespace

TEST_CASE("gen_trajectory") {
    SUBCASE("single straight") {
        auto spec = base_spec();
        const TruthTrajectory truth(spec.route);
        const auto end = truth.state(60.0);
        CHECK(end.x == doctest::Approx(600.0));
        CHECK(std::abs(end.y) < 1e-12);
        for (double t = 0; t <= 60.0; t += 7.3) {
            CHECK(truth.state(t).heading == doctest::Approx(0.0));
            CHECK(truth.state(t).speed == doctest::Approx(10.0));
        }
    }
    SUBCASE("quarter turn advances the heading by pi/2") {
        const double radius = 50.0, speed = 5.0;
        const double dur = (kPi / 2) * radius / speed;
        const std::vector<RoutePrimitive> route{arc(dur, speed, radius)};
        const TruthTrajectory truth(route);
        CHECK(truth.state(dur).heading == doctest::Approx(kPi / 2).epsilon(1e-12));
        CHECK(truth.state(dur).yaw_rate == doctest::Approx(speed / radius));
    }
    SUBCASE("mixed plan matches the closed-form concatenation") {
        const std::vector<RoutePrimitive> route{straight(10.0, 10.0), arc(15.0, 5.0, -20.0),
                                                straight(5.0, 8.0)};
        const TruthTrajectory truth(route);
        // end of leg 1
        CHECK(truth.state(10.0).x == doctest::Approx(100.0));
        // end of leg 2: right turn through 15*5/20 rad
        const double w = 5.0 / -20.0;
        const double h1 = w * 15.0;
        const double x1 = 100.0 + (-20.0) * (std::sin(h1) - 0.0);
        const double y1 = -20.0 * (-std::cos(h1) + 1.0);
        CHECK(truth.state(25.0).x == doctest::Approx(x1).epsilon(1e-9));
        CHECK(truth.state(25.0).y == doctest::Approx(y1).epsilon(1e-9));
        // end of leg 3
        CHECK(truth.state(30.0).x == doctest::Approx(x1 + 8.0 * 5.0 * std::cos(h1)).epsilon(1e-9));
        CHECK(truth.state(30.0).y == doctest::Approx(y1 + 8.0 * 5.0 * std::sin(h1)).epsilon(1e-9));
    }
    SUBCASE("bad plans rejected") {
        auto make = [](const std::vector<RoutePrimitive>& r) { return TruthTrajectory(r); };
        CHECK_THROWS_AS(make({}), Error);
        CHECK_THROWS_AS(make({straight(0.0, 10.0)}), Error);
        CHECK_THROWS_AS(make({arc(10.0, 5.0, 0.0)}), Error);
    }
    SUBCASE("bad sensor parameters rejected") {
        auto spec = base_spec();
        spec.radar.sigma_doppler = -0.1;
        CHECK_THROWS_AS(sim::gen_trajectory(spec), Error);
        spec = base_spec();
        spec.lidar.clutter_fraction = 1.5;
        CHECK_THROWS_AS(sim::gen_trajectory(spec), Error);
        spec = base_spec();
        spec.camera.rate = 0.0;
        CHECK_THROWS_AS(sim::gen_trajectory(spec), Error);
    }
}

TEST_CASE("gen_gnss") {
    SUBCASE("mount yaw appears as a constant pose offset") {
        auto spec = base_spec();
        spec.gnss.mount.angles.yaw = deg2rad(2.0);
        const TruthTrajectory truth(spec.route);
        const auto rows = sim::gen_gnss(spec, truth);
        REQUIRE(!rows.empty());
        for (const auto& r : rows) {
            const double heading = truth.state(r.t).heading;
            CHECK(std::abs(wrap_pi(r.yaw_sensor() - heading - deg2rad(2.0))) < 1e-12);
        }
    }
    SUBCASE("yaw noise has the configured spread") {
        auto spec = base_spec();
        spec.route = {straight(600.0, 10.0)};
        spec.gnss.sigma_yaw = deg2rad(0.1);
        const TruthTrajectory truth(spec.route);
        const auto rows = sim::gen_gnss(spec, truth);
        std::vector<double> diffs;
        for (const auto& r : rows) {
            diffs.push_back(wrap_pi(r.yaw_sensor() - truth.state(r.t).heading));
        }
        const double std = circular_std(diffs);
        CHECK(std == doctest::Approx(deg2rad(0.1)).epsilon(0.2));
    }
    SUBCASE("zero mount gives zero mean difference") {
        auto spec = base_spec();
        const TruthTrajectory truth(spec.route);
        std::vector<double> diffs;
        for (const auto& r : sim::gen_gnss(spec, truth)) {
            diffs.push_back(wrap_pi(r.yaw_sensor() - truth.state(r.t).heading));
        }
        CHECK(std::abs(circular_mean(diffs)) < 1e-12);
    }
}

TEST_CASE("gen_lidar") {
    SUBCASE("identity mount puts the ground at -height exactly") {
        auto spec = base_spec();
        spec.lidar.mount.height = 1.9;
        spec.lidar.clutter_fraction = 0.0;
        const TruthTrajectory truth(spec.route);
        const auto out = sim::gen_lidar(spec, truth);
        REQUIRE(!out.frames.empty());
        for (const auto& p : out.frames.front().points) {
            CHECK(p.z() == doctest::Approx(-1.9).epsilon(1e-12));
        }
    }
    SUBCASE("mount roll tilts the plane normal by the matching rotation") {
        auto spec = base_spec();
        spec.lidar.mount.angles.roll = deg2rad(1.0);
        spec.lidar.clutter_fraction = 0.0;
        const TruthTrajectory truth(spec.route);
        const auto out = sim::gen_lidar(spec, truth);
        const auto plane = svd_plane_fit(out.frames.front().points);
        const Vec3 expected = spec.lidar.mount.angles.matrix().transpose() * Vec3::UnitZ();
        CHECK((plane.normal - expected).norm() < 1e-9);
        CHECK(plane.rms < 1e-9);
    }
    SUBCASE("clutter fraction is honored") {
        auto spec = base_spec();
        spec.lidar.clutter_fraction = 0.2;
        spec.lidar.points_per_frame = 1000;
        const TruthTrajectory truth(spec.route);
        const auto out = sim::gen_lidar(spec, truth);
        int off_plane = 0, total = 0;
        for (const auto& f : out.frames) {
            for (const auto& p : f.points) {
                ++total;
                if (std::abs(p.z() + 1.9) > 0.05) ++off_plane;
            }
        }
        CHECK(static_cast<double>(off_plane) / total == doctest::Approx(0.2).epsilon(0.02));
    }
    SUBCASE("turn roll bias tilts the plane during arcs only") {
        ScenarioSpec spec;
        spec.route = {straight(20.0, 10.0), arc(20.0, 5.0, 20.0), straight(20.0, 10.0)};
        spec.turn_roll_gain = 0.1745;  // 0.5 deg at 0.05 rad/s
        spec.lidar.clutter_fraction = 0.0;
        const TruthTrajectory truth(spec.route);
        const auto out = sim::gen_lidar(spec, truth);
        for (const auto& f : out.frames) {
            const auto plane = svd_plane_fit(f.points);
            const auto rp = plane_roll_pitch(plane.normal);
            const double expected_tilt = spec.turn_roll_gain * truth.state(f.t).yaw_rate;
            CHECK(std::abs(rp.roll - expected_tilt) < 1e-9);
        }
    }
}

TEST_CASE("gen_radar") {
    SUBCASE("noiseless rows satisfy the static Doppler relation exactly") {
        auto spec = base_spec();
        spec.radar.mount.angles.yaw = deg2rad(10.0);
        const TruthTrajectory truth(spec.route);
        const auto landmarks = sim::place_landmarks(spec, truth);
        const auto rows = sim::gen_radar(spec, truth, landmarks);
        REQUIRE(rows.size() > 100);
        for (const auto& p : rows) {
            const double expected = p.ego_speed * std::cos(p.azimuth + deg2rad(10.0));
            CHECK(std::abs(p.doppler - expected) < 1e-12);
        }
    }
    SUBCASE("field of view limits the azimuth") {
        auto spec = base_spec();
        const TruthTrajectory truth(spec.route);
        // landmark abeam the route start: bearing 70 degrees off forward
        std::vector<sim::Landmark> lm{{10.0 * std::cos(deg2rad(70.0)),
                                       10.0 * std::sin(deg2rad(70.0)), 0.0, 0.0}};
        const auto rows = sim::gen_radar(spec, truth, lm);
        for (const auto& p : rows) {
            CHECK(std::abs(p.azimuth) <= deg2rad(60.0) + 1e-12);
        }
    }
    SUBCASE("range limit is enforced") {
        auto spec = base_spec();
        const TruthTrajectory truth(spec.route);
        const auto landmarks = sim::place_landmarks(spec, truth);
        for (const auto& p : sim::gen_radar(spec, truth, landmarks)) {
            CHECK(p.range <= spec.radar.max_range + 1e-9);
        }
    }
    SUBCASE("re-entry after leaving the field of view gets a fresh id") {
        // drive away from the landmark, U-turn, come back
        ScenarioSpec spec;
        spec.route = {straight(15.0, 10.0), arc(6.2832, 5.0, 10.0), straight(15.0, 10.0)};
        spec.radar.landmark_count = 0;
        const TruthTrajectory truth(spec.route);
        std::vector<sim::Landmark> lm{{20.0, 5.0, 0.0, 0.0}};
        const auto rows = sim::gen_radar(spec, truth, lm);
        REQUIRE(!rows.empty());
        std::set<int> early_ids, late_ids;
        for (const auto& p : rows) {
            if (p.t < 15.0) early_ids.insert(p.track_id);
            if (p.t > 30.0) late_ids.insert(p.track_id);
        }
        REQUIRE(!early_ids.empty());
        REQUIRE(!late_ids.empty());
        for (int id : late_ids) CHECK(early_ids.count(id) == 0);
    }
    SUBCASE("movers violate the static relation") {
        auto spec = base_spec();
        spec.radar.landmark_count = 0;
        spec.radar.mover_count = 5;
        const TruthTrajectory truth(spec.route);
        const auto landmarks = sim::place_landmarks(spec, truth);
        const auto rows = sim::gen_radar(spec, truth, landmarks);
        int violations = 0;
        for (const auto& p : rows) {
            if (std::abs(p.doppler - p.ego_speed * std::cos(p.azimuth)) > 0.5) ++violations;
        }
        CHECK(violations > static_cast<int>(rows.size()) / 2);
    }
}

TEST_CASE("gen_camera") {
    SUBCASE("identity mount projects to the principal point") {
        auto spec = base_spec();
        const TruthTrajectory truth(spec.route);
        for (const auto& obs : sim::gen_camera(spec, truth)) {
            CHECK(obs.vp_u == doctest::Approx(640.0));
            CHECK(obs.vp_v == doctest::Approx(360.0));
            CHECK(obs.hl_theta == doctest::Approx(0.0));
        }
    }
    SUBCASE("mount pitch moves the VP horizontally") {
        auto spec = base_spec();
        spec.camera.mount.angles.pitch = -0.1;
        const TruthTrajectory truth(spec.route);
        const auto rows = sim::gen_camera(spec, truth);
        CHECK(rows.front().vp_u == doctest::Approx(640.0 + 1000.0 * std::tan(0.1)).epsilon(1e-12));
        CHECK(rows.front().vp_v == doctest::Approx(360.0));
    }
    SUBCASE("mount roll appears in the horizon angle") {
        auto spec = base_spec();
        spec.camera.mount.angles.roll = 0.05;
        const TruthTrajectory truth(spec.route);
        std::vector<double> hls;
        for (const auto& obs : sim::gen_camera(spec, truth)) hls.push_back(obs.hl_theta);
        CHECK(circular_mean(hls) == doctest::Approx(0.05));
    }
    SUBCASE("exact projective horizon reduces to roll at zero pan/tilt") {
        const Intrinsics K{1000, 1000, 640, 360, 0};
        CHECK(sim::exact_hl_angle(K, 0.0, 0.0, 0.07) == doctest::Approx(0.07).epsilon(1e-12));
        // couples with pan/tilt only at second order
        const double coupled = sim::exact_hl_angle(K, 0.02, -0.04, 0.07);
        CHECK(std::abs(coupled - 0.07) < 5e-3);
        CHECK(std::abs(coupled - 0.07) > 1e-12);
    }
}

TEST_CASE("generators are bit-reproducible for a fixed seed") {
    auto spec = base_spec();
    spec.gnss.sigma_yaw = deg2rad(0.1);
    spec.radar.sigma_doppler = 0.1;
    spec.lidar.sigma_range = 0.01;
    spec.camera.sigma_vp_px = 2.0;
    const TruthTrajectory truth(spec.route);
    const auto landmarks = sim::place_landmarks(spec, truth);

    const auto g1 = sim::gen_gnss(spec, truth);
    const auto g2 = sim::gen_gnss(spec, truth);
    REQUIRE(g1.size() == g2.size());
    for (size_t i = 0; i < g1.size(); ++i) {
        CHECK(g1[i].qw == g2[i].qw);
        CHECK(g1[i].x == g2[i].x);
    }
    const auto r1 = sim::gen_radar(spec, truth, landmarks);
    const auto r2 = sim::gen_radar(spec, truth, landmarks);
    REQUIRE(r1.size() == r2.size());
    for (size_t i = 0; i < r1.size(); ++i) {
        CHECK(r1[i].doppler == r2[i].doppler);
        CHECK(r1[i].track_id == r2[i].track_id);
    }
    auto spec2 = spec;
    spec2.seed = 8;
    const auto g3 = sim::gen_gnss(spec2, truth);
    bool any_diff = false;
    for (size_t i = 0; i < std::min(g1.size(), g3.size()); ++i) {
        if (g1[i].qw != g3[i].qw) any_diff = true;
    }
    CHECK(any_diff);
}

TEST_CASE("oracle closure: each calibrator recovers its noiseless mount") {
    ScenarioSpec spec;
    spec.route = {straight(50.0, 10.0), arc(20.0, 5.0, 20.0), straight(50.0, 10.0)};
    spec.seed = 5;
    spec.gnss.mount.angles.yaw = deg2rad(2.0);
    spec.lidar.mount.angles = {deg2rad(3.0), deg2rad(2.0), deg2rad(1.0)};
    spec.lidar.mount.height = 1.9;
    spec.lidar.points_per_frame = 400;
    spec.radar.mount.angles.yaw = deg2rad(10.0);
    spec.radar.landmark_count = 80;
    spec.camera.mount.angles = {0.02, -0.04, 0.03};
    const TruthTrajectory truth(spec.route);

    SUBCASE("gnss") {
        const auto rows = sim::gen_gnss(spec, truth);
        const auto est = gnss_yaw_offset(to_samples(rows));
        CHECK(std::abs(est.yaw_offset - deg2rad(2.0)) < 1e-4);
    }
    SUBCASE("lidar") {
        const auto out = sim::gen_lidar(spec, truth);
        LidarCalibConfig cfg;
        const auto est = calibrate_lidar(out.frames, out.poses, cfg);
        CHECK(std::abs(est.roll - deg2rad(1.0)) < 1e-4);
        CHECK(std::abs(est.pitch - deg2rad(2.0)) < 1e-4);
        CHECK(std::abs(est.yaw - deg2rad(3.0)) < 1e-4);
        // z is reported along the sensor z-axis: height / cos(roll)cos(pitch)
        const double expected_z = 1.9 / (std::cos(deg2rad(1.0)) * std::cos(deg2rad(2.0)));
        CHECK(std::abs(est.z - expected_z) < 1e-4);
        CHECK(std::abs(est.z - 1.9) < 0.01);
    }
    SUBCASE("radar velocity") {
        const auto rows = sim::gen_radar(spec, truth, sim::place_landmarks(spec, truth));
        RadarVelocityConfig cfg;
        const auto est = calibrate_radar_velocity(rows, cfg);
        CHECK(std::abs(est.yaw - deg2rad(10.0)) < 1e-4);
    }
    SUBCASE("radar position") {
        const auto rows = sim::gen_radar(spec, truth, sim::place_landmarks(spec, truth));
        RadarPositionConfig cfg;
        const auto est = calibrate_radar_position(rows, cfg);
        CHECK(std::abs(est.yaw - deg2rad(10.0)) < 1e-4);
    }
    SUBCASE("camera") {
        // straight-only route: during a steady arc the VP is displaced but
        // stable, so the gate cannot reject it (matching the flat-road
        // assumption of the method)
        auto cam_spec = spec;
        cam_spec.route = {straight(120.0, 10.0)};
        const TruthTrajectory cam_truth(cam_spec.route);
        const auto rows = sim::gen_camera(cam_spec, cam_truth);
        CameraConfig cfg;
        const auto run = calibrate_camera(rows, cam_spec.camera.intrinsics, cfg);
        REQUIRE(run.has_aggregate);
        CHECK(std::abs(run.aggregate.roll - 0.03) < 1e-6);
        CHECK(std::abs(run.aggregate.pitch - (-0.04)) < 1e-6);
        CHECK(std::abs(run.aggregate.yaw - 0.02) < 1e-6);
    }
}
