#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "carcal/camera.hpp"
#include "carcal/geom.hpp"
#include "carcal/lidar.hpp"
#include "carcal/radar.hpp"
#include "carcal/trajectory.hpp"

namespace carcal::sim {

struct RoutePrimitive {
    enum class Kind { straight, arc };
    Kind kind = Kind::straight;
    double duration = 0.0;  // s
    double speed = 0.0;     // m/s
    double radius = 0.0;    // m, signed (positive = left turn); arcs only
};

struct MountSpec {
    EulerYPR angles;      // sensor-to-vehicle rotation
    double height = 0.0;  // m above ground (LiDAR only)
};

struct GnssSimParams {
    bool enabled = true;
    double rate = 10.0;  // Hz
    MountSpec mount;
    double sigma_pos = 0.0;  // m per axis
    double sigma_yaw = 0.0;  // rad
};

struct LidarSimParams {
    bool enabled = true;
    double rate = 10.0;
    MountSpec mount{{}, 1.9};
    int points_per_frame = 600;
    double ground_radius = 40.0;     // m, sampled ground disk
    double clutter_fraction = 0.0;   // fraction of points drawn off-plane
    double sigma_range = 0.0;        // m along the line of sight
    double sigma_pose_yaw = 0.0;     // rad on the reported pose
};

struct RadarSimParams {
    bool enabled = true;
    double rate = 15.0;
    MountSpec mount;
    double fov = deg2rad(120.0);
    double max_range = 30.0;
    int landmark_count = 60;
    double corridor = 25.0;       // m lateral landmark spread
    double corridor_min = 3.0;    // m, keeps landmarks off the path
    int mover_count = 0;
    double outliers_per_frame = 0.0;
    double sigma_azimuth = 0.0;   // rad
    double sigma_range = 0.0;     // m
    double sigma_doppler = 0.0;   // m/s
};

struct CameraSimParams {
    bool enabled = true;
    double rate = 10.0;
    MountSpec mount;  // angles in the VP/HL observation convention
    Intrinsics intrinsics{1000.0, 1000.0, 640.0, 360.0, 0.0};
    double sigma_vp_px = 0.0;
    double sigma_hl = 0.0;      // rad
    double vp_turn_gain = 1.0;  // rad of VP pan per rad/s of yaw rate
    bool exact_horizon = false;
};

struct ScenarioSpec {
    std::vector<RoutePrimitive> route;
    uint64_t seed = 1;
    double turn_roll_gain = 0.0;  // rad of vehicle roll per rad/s of yaw rate
    double truth_rate = 50.0;
    GnssSimParams gnss;
    LidarSimParams lidar;
    RadarSimParams radar;
    CameraSimParams camera;
};

struct TruthState {
    double t, x, y, heading, speed, yaw_rate;
};

/// Closed-form route integration; states are exact per primitive.
class TruthTrajectory {
public:
    explicit TruthTrajectory(std::span<const RoutePrimitive> route);

    TruthState state(double t) const;
    double duration() const { return duration_; }

private:
    struct Seg {
        RoutePrimitive::Kind kind;
        double t0, t1;
        double x0, y0, h0;
        double speed, radius;
    };
    std::vector<Seg> segs_;
    double duration_ = 0.0;
};

struct Landmark {
    double x = 0.0, y = 0.0;
    double vx = 0.0, vy = 0.0;  // movers only
};

std::vector<TruthState> gen_trajectory(const ScenarioSpec& spec);

std::vector<PoseRecord> gen_gnss(const ScenarioSpec& spec, const TruthTrajectory& truth);

struct LidarOutput {
    std::vector<PoseRecord> poses;
    std::vector<PointCloudFrame> frames;
};
LidarOutput gen_lidar(const ScenarioSpec& spec, const TruthTrajectory& truth);

/// Deterministic landmark placement along the route corridor.
std::vector<Landmark> place_landmarks(const ScenarioSpec& spec, const TruthTrajectory& truth);

std::vector<RadarPoint> gen_radar(const ScenarioSpec& spec, const TruthTrajectory& truth,
                                  std::span<const Landmark> landmarks);

std::vector<VPObservation> gen_camera(const ScenarioSpec& spec, const TruthTrajectory& truth);

/// Horizon angle from the full projective model (vanishing direction plus a
/// roll about it); couples with pan/tilt at second order.
double exact_hl_angle(const Intrinsics& K, double tilt, double pan, double roll);

/// Parses the key-value scenario file (documented in the README).
ScenarioSpec parse_scenario_file(const std::string& path);

/// Generates every enabled sensor stream and writes the full dataset
/// (pose/radar/VP CSVs, LiDAR frame directory, intrinsics, truth.json).
void write_scenario(const ScenarioSpec& spec, const std::string& out_dir);

}  // namespace carcal::sim
