#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "carcal/geom.hpp"
#include "carcal/trajectory.hpp"

namespace carcal {

struct PointCloudFrame {
    double t = 0.0;
    std::vector<Vec3> points;  // sensor frame, meters
};

/// Ground plane a x + b y + c z + d = 0 with unit normal (a, b, c).
/// Normals are canonicalized upward (c > 0) so d is the sensor height.
struct PlaneModel {
    Vec3 normal = Vec3(0, 0, 1);
    double d = 0.0;
    int inlier_count = 0;
    double rms = 0.0;
};

struct LidarEstimate {
    double roll = 0.0, pitch = 0.0, yaw = 0.0;  // rad
    double z = 0.0;                             // meters
    double roll_std = 0.0, pitch_std = 0.0, yaw_std = 0.0, z_std = 0.0;
    int frames_used = 0;
    int yaw_used_count = 0;
};

/// Keeps points whose planar range sqrt(x^2+y^2) lies in [r_min, r_max].
PointCloudFrame filter_points(const PointCloudFrame& frame, double r_min, double r_max);

/// Best plane over several independent RANSAC executions, ranked by inlier
/// count with lower rms breaking ties. Deterministic for a fixed seed.
PlaneModel ransac_plane_multi(std::span<const Vec3> points, int runs, int iterations_per_run,
                              double inlier_tol, uint64_t rng_seed);

/// Random search around a starting plane: per round, samples tilted/shifted
/// candidates and re-centers on the best. Inlier count never decreases.
PlaneModel refine_plane_random_search(std::span<const Vec3> points, const PlaneModel& start,
                                      double angle_range, double d_range, int samples, int rounds,
                                      uint64_t rng_seed, double inlier_tol = 0.05);

/// Total-least-squares plane through the centroid (smallest singular
/// direction of the centered points).
PlaneModel svd_plane_fit(std::span<const Vec3> inliers);

std::vector<Vec3> plane_inliers(std::span<const Vec3> points, const PlaneModel& plane,
                                double inlier_tol);

struct RotationHeight {
    Mat3 R;    // maps sensor coordinates onto the ground-aligned frame
    double z;  // d / c, distance to ground along the sensor -z axis
};

/// Axis-angle alignment of the plane normal onto +z plus the height read off
/// the plane intercept. Rejects planes with c <= 0.5 (walls).
RotationHeight plane_to_rotation_height(const PlaneModel& plane);

struct RollPitch {
    double roll, pitch;
};

/// Roll/pitch of the zero-yaw leveling rotation Ry(pitch)Rx(roll) that maps
/// the ground normal onto +z: roll = atan2(b, c), pitch = -asin(a).
RollPitch plane_roll_pitch(const Vec3& normal);

/// Mean wrapped difference between pose yaw and spline heading over the
/// valid set (same machinery as the GNSS method).
YawOffsetResult lidar_yaw_offset(std::span<const PoseSample> poses, const TrajectoryGates& gates);

struct LidarCalibConfig {
    double r_min = 2.0;
    double r_max = 50.0;
    int ransac_runs = 5;
    int ransac_iterations = 200;
    double inlier_tol = 0.05;          // m
    double refine_angle_range = 0.00872664625997164788;  // 0.5 deg
    double refine_d_range = 0.05;      // m
    int refine_samples = 100;
    int refine_rounds = 3;
    int frame_stride = 10;             // process every k-th frame
    double yaw_rate_max = 0.05;        // rad/s, sharp-turn gate
    int min_ground_points = 30;
    TrajectoryGates gates{9.0, 0.01};
    int spline_degree = 3;
    double spline_ctrl_spacing = 0.0;  // > 0 smooths noisy pose tracks
    uint64_t seed = 1;
};

/// Full pipeline: per-frame ground extraction on a strided, turn-gated frame
/// subset for roll/pitch/height, then the trajectory yaw offset computed on
/// the pose stream re-leveled by the estimated roll/pitch.
LidarEstimate calibrate_lidar(std::span<const PointCloudFrame> frames,
                              std::span<const PoseRecord> poses, const LidarCalibConfig& cfg);

}  // namespace carcal
