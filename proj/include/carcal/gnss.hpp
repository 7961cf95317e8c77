#pragma once

#include <span>

#include "carcal/trajectory.hpp"

namespace carcal {

struct GnssEstimate {
    double yaw_offset = 0.0;  // rad, in (-pi, pi]
    int used_count = 0;
    double dispersion = 0.0;  // rad
};

/// GNSS-tuned gates: heading quality degrades at low speed, so the speed
/// floor sits below the LiDAR default.
struct GnssCalibConfig {
    TrajectoryGates gates{4.0, 0.01};
    int spline_degree = 3;
    // > 0 fits a smoothing spline with this control spacing (seconds)
    // instead of interpolating; for noisy position tracks
    double spline_ctrl_spacing = 0.0;
};

/// Heading offset between the IMU yaw and the trajectory tangent, averaged
/// over the valid timestamp set. Same machinery as the LiDAR yaw method.
GnssEstimate gnss_yaw_offset(std::span<const PoseSample> poses, const GnssCalibConfig& cfg = {});

}  // namespace carcal
