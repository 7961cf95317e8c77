#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "carcal/errors.hpp"

namespace carcal {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg2rad(double d) { return d * kPi / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

/// Wraps an angle to (-pi, pi].
double wrap_pi(double a);

/// Wraps an angle to (-pi/2, pi/2] (line orientations are pi-periodic).
double wrap_half_pi(double a);

/// Euler angles for the vehicle frame (x forward, y left, z up).
/// Convention: intrinsic Z-Y-X — yaw about z, then pitch about y, then roll
/// about x. All angles in radians, kept in (-pi, pi].
struct EulerYPR {
    double yaw = 0.0;
    double pitch = 0.0;
    double roll = 0.0;

    /// Rz(yaw) * Ry(pitch) * Rx(roll).
    Mat3 matrix() const;

    /// Inverse of matrix(). Near the pitch singularity (|cos pitch| < 1e-9)
    /// roll is fixed to zero and yaw absorbs the remaining freedom.
    static EulerYPR from_matrix(const Mat3& R);
};

/// Axis-angle rotation: cos(a) I + (1-cos(a)) n n^T + sin(a) [n]x.
/// The axis must be unit length within 1e-6.
Mat3 rodrigues(const Vec3& axis, double angle);

struct AxisAngle {
    Vec3 axis;
    double angle;
};

/// Axis and angle taking `from` onto `to` (both unit vectors).
/// Parallel inputs return angle 0 with the fixed axis (0,0,1); antiparallel
/// inputs are rejected since the axis is undefined.
AxisAngle rotation_between(const Vec3& from, const Vec3& to);

Mat3 skew(const Vec3& v);

/// Wrap-safe mean direction: atan2(sum sin, sum cos), in (-pi, pi].
double circular_mean(std::span<const double> angles);

/// Weighted circular mean. Weights must be non-negative with positive sum.
double circular_mean_weighted(std::span<const double> angles,
                              std::span<const double> weights);

/// Wrap-safe dispersion sqrt(-2 ln Rbar), Rbar the mean resultant length.
/// Zero iff all angles are identical (mod 2pi). Requires >= 2 angles.
double circular_std(std::span<const double> angles);

}  // namespace carcal
