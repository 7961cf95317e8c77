#pragma once

#include <span>
#include <vector>

#include "carcal/geom.hpp"

namespace carcal {

/// Timestamped planar pose sample. yaw_sensor is the sensor forward direction
/// in the world frame (from a SLAM or GNSS/INS quaternion).
struct PoseSample {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double yaw_sensor = 0.0;
};

/// Full 6-DoF pose row as stored in the pose CSV contract
/// (`t,x,y,z,qw,qx,qy,qz`, Hamilton quaternion, sensor-to-world, w first).
struct PoseRecord {
    double t = 0.0;
    double x = 0.0, y = 0.0, z = 0.0;
    double qw = 1.0, qx = 0.0, qy = 0.0, qz = 0.0;

    Mat3 rotation() const;
    /// Heading of the rotated x-axis in the world xy plane.
    double yaw_sensor() const;
    PoseSample sample() const;
};

std::vector<PoseSample> to_samples(std::span<const PoseRecord> records);

/// Per-axis B-spline of planar position against time. Clamped knot vector,
/// parameterized directly by t so derivatives are physical velocities and
/// accelerations. Immutable once fitted.
class TrajectorySpline {
public:
    struct State {
        double x, y;      // position
        double xd, yd;    // first derivative (m/s)
        double xdd, ydd;  // second derivative (m/s^2)
    };

    int degree() const { return degree_; }
    double t_min() const { return knots_[static_cast<size_t>(degree_)]; }
    double t_max() const { return knots_[ctrl_x_.size()]; }

    State eval(double t) const;

    const std::vector<double>& knots() const { return knots_; }

private:
    friend TrajectorySpline fit_spline(std::span<const PoseSample>, int);
    friend TrajectorySpline fit_spline_approx(std::span<const PoseSample>, int, double);

    int degree_ = 3;
    std::vector<double> knots_;
    std::vector<double> ctrl_x_, ctrl_y_;

    int find_span(double u) const;
};

/// Interpolating fit: the spline passes through every sample exactly.
/// Requires >= degree+1 samples with strictly increasing timestamps.
TrajectorySpline fit_spline(std::span<const PoseSample> samples, int degree = 3);

/// Least-squares fit with control points every ctrl_spacing seconds, for
/// noisy position tracks. A small ridge term keeps sparse data well posed.
TrajectorySpline fit_spline_approx(std::span<const PoseSample> samples, int degree,
                                   double ctrl_spacing_s);

/// Direction of travel atan2(y', x') in (-pi, pi]. Throws below the
/// numerical speed floor (squared speed < 1e-8).
double heading_at(const TrajectorySpline& spline, double t);

/// Squared planar speed (x')^2 + (y')^2. The gate thresholds are expressed
/// in squared units to match.
double speed_sq_at(const TrajectorySpline& spline, double t);

struct CurvatureComponents {
    double cx;
    double cy;
};

/// Per-axis curvature |x''| / (1 + (x')^2)^(3/2) and the y analogue.
CurvatureComponents curvature_components_at(const TrajectorySpline& spline, double t);

struct TrajectoryGates {
    double v_min_sq = 9.0;  // (m/s)^2
    double c_max = 0.01;    // per-axis curvature bound
};

/// Timestamps passing both gates: speed_sq >= v_min_sq and
/// max(cx, cy) <= c_max. May be empty.
std::vector<double> valid_set(const TrajectorySpline& spline, std::span<const double> timestamps,
                              const TrajectoryGates& gates);

struct StraightSegment {
    double t_start;
    double t_end;
    double mean_heading;
    double length;  // chord length in meters
};

struct StraightSegmentParams {
    double min_length_m = 50.0;
    double max_heading_dev = 0.05;  // rad
    double simplify_tol_m = 0.5;    // polyline split tolerance
};

/// Splits the xy path by recursive max-deviation polyline simplification and
/// keeps legs that are long enough and heading-consistent. Output segments
/// are disjoint in time and ordered.
std::vector<StraightSegment> extract_straight_segments(std::span<const PoseSample> samples,
                                                       const StraightSegmentParams& params);

struct YawOffsetResult {
    double offset = 0.0;      // rad
    int used_count = 0;       // timestamps in the valid set
    double dispersion = 0.0;  // circular std of per-sample offsets
};

/// Mean wrapped difference between the sensor yaw and the spline heading over
/// the valid timestamp set. Shared by the LiDAR and GNSS/INS yaw methods.
/// approx_ctrl_spacing > 0 switches to the least-squares fit with control
/// points that far apart (for noisy position tracks); 0 interpolates.
YawOffsetResult yaw_offset_from_poses(std::span<const PoseSample> samples,
                                      const TrajectoryGates& gates, int spline_degree = 3,
                                      double approx_ctrl_spacing = 0.0);

}  // namespace carcal
