#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "carcal/geom.hpp"
#include "carcal/trajectory.hpp"

namespace carcal {

/// One Doppler detection with the ego state joined in. Azimuth is measured
/// from the sensor forward axis, counter-clockwise positive; doppler is the
/// relative radial speed, positive toward the sensor.
struct RadarPoint {
    double t = 0.0;
    int track_id = -1;
    double range = 0.0;      // m
    double azimuth = 0.0;    // rad
    double doppler = 0.0;    // m/s
    double ego_speed = 0.0;  // m/s
    double ego_x = 0.0;      // m, world frame
    double ego_y = 0.0;
};

struct RadarObject {
    int track_id = -1;
    std::vector<RadarPoint> points;  // strictly increasing t
};

enum class RadarMethod { velocity, position };

struct RadarEstimate {
    double yaw = 0.0;  // rad, in (-pi, pi]
    RadarMethod method = RadarMethod::velocity;
    double confidence_sum = 0.0;
    int iterations = 0;    // velocity method
    int objects_used = 0;  // position method
};

/// Grid search over [-A, A] with the given step: the candidate with the most
/// points satisfying |doppler - ego_speed cos(azimuth + psi)| < residual_tol.
/// Ties break toward smaller |psi|.
double coarse_yaw_search(std::span<const RadarPoint> points, double search_half_range,
                         double step, double residual_tol);

/// Points consistent with the static-target Doppler relation at the given yaw.
std::vector<RadarPoint> select_static_points(std::span<const RadarPoint> points, double psi,
                                             double residual_tol);

/// One-dimensional damped Gauss-Newton fit of
/// sum (doppler_i - ego_speed_i cos(azimuth_i + psi))^2 starting at psi_init.
double fit_cosine_yaw(std::span<const RadarPoint> static_points, double psi_init,
                      double max_step = 0.15, double max_total_move = deg2rad(45.0));

/// Splits a time-sorted point list into per-frame groups (shared timestamp).
std::vector<std::vector<RadarPoint>> split_frames(std::span<const RadarPoint> points);

struct RadarVelocityConfig {
    double search_half_range = deg2rad(45.0);  // A
    double search_step = deg2rad(5.0);         // grid interval
    double residual_tol = 0.5;                 // m/s
    int iterations = 500;
    double burn_in_fraction = 0.25;
    // per-iteration damping keeps the trace smooth: the estimate moves by
    // update_gain times the frame innovation, capped at max_step_per_iter
    double update_gain = 0.05;
    double max_step_per_iter = 0.01;  // rad
};

/// Iterates select-then-fit over the frame sequence (cycling when iterations
/// exceed the frame count) and circular-averages the post-burn-in estimates.
/// The per-iteration trace is appended to *trace when given.
RadarEstimate refine_yaw_iterative(std::span<const std::vector<RadarPoint>> frames,
                                   double psi_init, const RadarVelocityConfig& cfg,
                                   std::vector<double>* trace = nullptr);

/// Coarse grid search followed by the iterative refinement.
RadarEstimate calibrate_radar_velocity(std::span<const RadarPoint> points,
                                       const RadarVelocityConfig& cfg,
                                       std::vector<double>* trace = nullptr);

/// Maximal runs of consecutive frames per track id; runs spanning at least
/// min_track_frames frames become objects.
std::vector<RadarObject> group_objects(std::span<const RadarPoint> points, int min_track_frames);

/// Checks every (P0, Pi) pair against the triangle identity between the
/// subtended angle at the target and the azimuth difference. Pairs with ego
/// baseline <= d_min are uninformative and skipped.
bool is_static_object(const RadarObject& obj, double angle_tol, double d_min);

/// Yaw from the triangle formed by two ego positions and one static target.
/// The angle at the later position is measured from the backward baseline, so
/// its supplement enters. The triangle is left/right symmetric about the
/// baseline; side_hint (+1 left, -1 right) settles it when the caller knows
/// the side (the position pipeline reads it off the object's azimuth trend),
/// otherwise Doppler consistency decides, with the azimuth sign as fallback.
double yaw_from_pair(const RadarPoint& p0, const RadarPoint& pi, double d_min = 1.0,
                     int side_hint = 0);

/// Side of a tracked object relative to the ego path: +1 left, -1 right,
/// 0 if the azimuth swing is too small to tell.
int object_side(const RadarObject& obj, double min_swing = 0.01);

/// 1 - |doppler/cos(azimuth+psi) - ego_speed| / ego_speed, clamped to [0, 1].
/// Near-orthogonal rays (|cos| <= 1e-3) score zero.
double estimation_confidence(const RadarPoint& p, double psi);

/// Confidence-weighted circular mean of per-pair yaw estimates.
RadarEstimate weighted_yaw(std::span<const double> yaws, std::span<const double> confidences);

struct RadarPositionConfig {
    double pair_angle_tol = 0.02;  // rad, static test tolerance
    int min_track_frames = 5;
    double d_min = 1.0;  // m, minimum informative ego baseline
    // both pair endpoints must have their instantaneous ego heading this
    // close to the segment direction (the pair math assumes the azimuths are
    // referenced to the baseline)
    double pair_heading_tol = 0.005;  // rad
    StraightSegmentParams segments{50.0, 0.05, 0.5};
};

/// Position-informed method: straight segments -> object grouping -> static
/// test -> per-pair yaw -> confidence weighting.
RadarEstimate calibrate_radar_position(std::span<const RadarPoint> points,
                                       const RadarPositionConfig& cfg);

}  // namespace carcal
