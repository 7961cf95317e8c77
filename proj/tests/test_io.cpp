#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "carcal/io.hpp"
#include "carcal/sim.hpp"

using namespace carcal;
namespace fs = std::filesystem;

namespace {

// fresh scratch directory per test run
fs::path scratch_dir() {
    static int counter = 0;
    const fs::path p =
        fs::temp_directory_path() / ("carcal_io_test_" + std::to_string(::getpid()) + "_" +
                                     std::to_string(counter++));
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

}  // namespace

TEST_CASE("pose csv round trip is lossless") {
    const auto dir = scratch_dir();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<PoseRecord> poses;
    for (int i = 0; i < 50; ++i) {
        poses.push_back({0.1 * i + u(rng) * 0.01, u(rng) * 100, u(rng) * 100, u(rng), u(rng),
                         u(rng), u(rng), u(rng)});
        if (i > 0 && poses[i].t <= poses[i - 1].t) poses[i].t = poses[i - 1].t + 0.01;
    }
    const auto path = (dir / "poses.csv").string();
    io::write_pose_csv(path, poses);
    const auto back = io::read_pose_csv(path);
    REQUIRE(back.size() == poses.size());
    for (size_t i = 0; i < poses.size(); ++i) {
        CHECK(back[i].t == poses[i].t);
        CHECK(back[i].x == poses[i].x);
        CHECK(back[i].y == poses[i].y);
        CHECK(back[i].z == poses[i].z);
        CHECK(back[i].qw == poses[i].qw);
        CHECK(back[i].qx == poses[i].qx);
        CHECK(back[i].qy == poses[i].qy);
        CHECK(back[i].qz == poses[i].qz);
    }
}

TEST_CASE("radar and vp round trips are lossless") {
    const auto dir = scratch_dir();
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    std::vector<RadarPoint> radar;
    for (int i = 0; i < 40; ++i) {
        radar.push_back({0.1 * i, i % 7, std::abs(u(rng)) + 1, u(rng) * 0.1, u(rng), 10.0,
                         u(rng) * 50, u(rng) * 50});
    }
    io::write_radar_csv((dir / "radar.csv").string(), radar);
    const auto radar_back = io::read_radar_csv((dir / "radar.csv").string());
    REQUIRE(radar_back.size() == radar.size());
    for (size_t i = 0; i < radar.size(); ++i) {
        CHECK(radar_back[i].track_id == radar[i].track_id);
        CHECK(radar_back[i].azimuth == radar[i].azimuth);
        CHECK(radar_back[i].doppler == radar[i].doppler);
        CHECK(radar_back[i].ego_x == radar[i].ego_x);
    }

    std::vector<VPObservation> vp;
    for (int i = 0; i < 30; ++i) vp.push_back({0.1 * i, 640 + u(rng), 360 + u(rng), u(rng) * 0.02});
    io::write_vp_csv((dir / "vp.csv").string(), vp);
    const auto vp_back = io::read_vp_csv((dir / "vp.csv").string());
    REQUIRE(vp_back.size() == vp.size());
    for (size_t i = 0; i < vp.size(); ++i) {
        CHECK(vp_back[i].vp_u == vp[i].vp_u);
        CHECK(vp_back[i].hl_theta == vp[i].hl_theta);
    }
}

TEST_CASE("lines csv groups rows by frame") {
    const auto dir = scratch_dir();
    std::vector<LineFrame> frames(2);
    frames[0].t = 0.1;
    frames[0].lines = {{0, 0, 100, 50}, {10, 20, 200, 10}};
    frames[1].t = 0.2;
    frames[1].lines = {{5, 5, 50, 100}};
    const auto path = (dir / "lines.csv").string();
    io::write_lines_csv(path, frames);
    const auto back = io::read_lines_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].lines.size() == 2);
    CHECK(back[1].lines.size() == 1);
    CHECK(back[0].lines[1].u2 == 200);
}

TEST_CASE("lidar directory round trip") {
    const auto dir = scratch_dir();
    std::vector<PointCloudFrame> frames(3);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    for (int f = 0; f < 3; ++f) {
        frames[f].t = 0.1 * f;
        for (int i = 0; i < 25; ++i) frames[f].points.emplace_back(u(rng), u(rng), u(rng));
    }
    const auto cloud_dir = (dir / "clouds").string();
    io::write_lidar_dir(cloud_dir, frames);
    const auto back = io::read_lidar_dir(cloud_dir);
    REQUIRE(back.size() == 3);
    for (int f = 0; f < 3; ++f) {
        CHECK(back[f].t == frames[f].t);
        REQUIRE(back[f].points.size() == frames[f].points.size());
        for (size_t i = 0; i < frames[f].points.size(); ++i) {
            CHECK(back[f].points[i] == frames[f].points[i]);
        }
    }
}

TEST_CASE("intrinsics file") {
    const auto dir = scratch_dir();
    const Intrinsics K{721.5, 720.25, 609.5, 172.854, 0.0};
    const auto path = (dir / "intrinsics.txt").string();
    io::write_intrinsics(path, K);
    const auto back = io::read_intrinsics(path);
    CHECK(back.fx == K.fx);
    CHECK(back.fy == K.fy);
    CHECK(back.cx == K.cx);
    CHECK(back.cy == K.cy);
    CHECK(back.skew == K.skew);

    write_text(dir / "missing.txt", "fx = 100\nfy = 100\ncx = 5\n");
    CHECK_THROWS_AS(io::read_intrinsics((dir / "missing.txt").string()), Error);
    write_text(dir / "unknown.txt", "fx = 100\nfy = 100\ncx = 5\ncy = 5\nfoo = 1\n");
    CHECK_THROWS_AS(io::read_intrinsics((dir / "unknown.txt").string()), Error);
}

TEST_CASE("csv validation errors") {
    const auto dir = scratch_dir();
    SUBCASE("wrong header") {
        write_text(dir / "bad.csv", "time,x,y\n1,2,3\n");
        CHECK_THROWS_AS(io::read_pose_csv((dir / "bad.csv").string()), Error);
    }
    SUBCASE("wrong field count") {
        write_text(dir / "bad.csv", "t,x,y,z,qw,qx,qy,qz\n1,2,3\n");
        CHECK_THROWS_AS(io::read_pose_csv((dir / "bad.csv").string()), Error);
    }
    SUBCASE("non-numeric field") {
        write_text(dir / "bad.csv", "t,x,y,z,qw,qx,qy,qz\n1,2,three,4,1,0,0,0\n");
        CHECK_THROWS_AS(io::read_pose_csv((dir / "bad.csv").string()), Error);
    }
    SUBCASE("non-increasing timestamps") {
        write_text(dir / "bad.csv",
                   "t,x,y,z,qw,qx,qy,qz\n1,0,0,0,1,0,0,0\n1,1,0,0,1,0,0,0\n");
        CHECK_THROWS_AS(io::read_pose_csv((dir / "bad.csv").string()), Error);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(io::read_pose_csv((dir / "nope.csv").string()), Error);
    }
    SUBCASE("radar row invariants") {
        const std::string header = "t,track_id,range,azimuth,doppler,ego_speed,ego_x,ego_y\n";
        write_text(dir / "r1.csv", header + "0,1,-5,0,1,10,0,0\n");  // negative range
        CHECK_THROWS_AS(io::read_radar_csv((dir / "r1.csv").string()), Error);
        write_text(dir / "r2.csv", header + "0,1,5,4.0,1,10,0,0\n");  // azimuth beyond pi
        CHECK_THROWS_AS(io::read_radar_csv((dir / "r2.csv").string()), Error);
        write_text(dir / "r3.csv", header + "0,1,5,0,1,-1,0,0\n");  // negative ego speed
        CHECK_THROWS_AS(io::read_radar_csv((dir / "r3.csv").string()), Error);
        write_text(dir / "r4.csv", header + "0,1,5,0,nan,10,0,0\n");  // non-finite field
        CHECK_THROWS_AS(io::read_radar_csv((dir / "r4.csv").string()), Error);
    }
}

TEST_CASE("kv file parsing") {
    const auto dir = scratch_dir();
    write_text(dir / "cfg.txt", "# comment\n  a = 1.5\nb=hello  # trailing\n\nc.d = -2\n");
    const auto kv = io::read_kv_file((dir / "cfg.txt").string());
    REQUIRE(kv.size() == 3);
    CHECK(kv[0].first == "a");
    CHECK(io::parse_double(kv[0].second, "t") == 1.5);
    CHECK(kv[1].second == "hello");
    CHECK(kv[2].first == "c.d");
    CHECK(io::parse_long(kv[2].second, "t") == -2);
    CHECK_THROWS_AS(io::parse_double("abc", "t"), Error);
    CHECK_THROWS_AS(io::parse_bool("maybe", "t"), Error);
    CHECK(io::parse_bool("true", "t"));
    write_text(dir / "noeq.txt", "just a line\n");
    CHECK_THROWS_AS(io::read_kv_file((dir / "noeq.txt").string()), Error);
}

TEST_CASE("generated scenario files round-trip through the readers") {
    const auto dir = scratch_dir();
    sim::ScenarioSpec spec;
    spec.route = {{sim::RoutePrimitive::Kind::straight, 10.0, 10.0, 0.0}};
    spec.seed = 3;
    spec.lidar.points_per_frame = 50;
    spec.gnss.sigma_yaw = deg2rad(0.1);
    spec.radar.sigma_doppler = 0.1;
    sim::write_scenario(spec, dir.string());

    CHECK(fs::exists(dir / "truth.json"));
    const auto poses = io::read_pose_csv((dir / "gnss_poses.csv").string());
    const auto truth = sim::TruthTrajectory(spec.route);
    const auto direct = sim::gen_gnss(spec, truth);
    REQUIRE(poses.size() == direct.size());
    for (size_t i = 0; i < poses.size(); ++i) {
        CHECK(poses[i].qw == direct[i].qw);
        CHECK(poses[i].x == direct[i].x);
    }
    const auto radar = io::read_radar_csv((dir / "radar.csv").string());
    const auto radar_direct =
        sim::gen_radar(spec, truth, sim::place_landmarks(spec, truth));
    REQUIRE(radar.size() == radar_direct.size());
    for (size_t i = 0; i < radar.size(); ++i) {
        CHECK(radar[i].doppler == radar_direct[i].doppler);
    }
    const auto clouds = io::read_lidar_dir((dir / "lidar_frames").string());
    const auto lidar_direct = sim::gen_lidar(spec, truth);
    REQUIRE(clouds.size() == lidar_direct.frames.size());
    CHECK(clouds[0].points[0] == lidar_direct.frames[0].points[0]);
}

TEST_CASE("scenario file parsing") {
    const auto dir = scratch_dir();
    write_text(dir / "scenario.txt",
               "seed = 9\n"
               "route = straight 60 10 ; arc 20 5 20 ; straight 60 10\n"
               "turn_roll_gain = 0.1745\n"
               "gnss.mount.yaw_deg = 2\n"
               "lidar.mount.roll_deg = 1\n"
               "lidar.mount.height = 1.9\n"
               "radar.mount.yaw_deg = 10\n"
               "radar.noise.doppler = 0.1\n"
               "camera.fx = 800\n"
               "camera.exact_horizon = false\n");
    const auto spec = sim::parse_scenario_file((dir / "scenario.txt").string());
    CHECK(spec.seed == 9);
    REQUIRE(spec.route.size() == 3);
    CHECK(spec.route[1].kind == sim::RoutePrimitive::Kind::arc);
    CHECK(spec.route[1].radius == 20.0);
    CHECK(spec.gnss.mount.angles.yaw == doctest::Approx(deg2rad(2.0)));
    CHECK(spec.lidar.mount.angles.roll == doctest::Approx(deg2rad(1.0)));
    CHECK(spec.radar.sigma_doppler == 0.1);
    CHECK(spec.camera.intrinsics.fx == 800.0);

    write_text(dir / "bad.txt", "route = straight 60 10\nnot_a_key = 1\n");
    CHECK_THROWS_AS(sim::parse_scenario_file((dir / "bad.txt").string()), Error);
    write_text(dir / "noroute.txt", "seed = 1\n");
    CHECK_THROWS_AS(sim::parse_scenario_file((dir / "noroute.txt").string()), Error);
}
