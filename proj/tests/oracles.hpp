// Test-only reference implementations, kept independent of the library code
// they check. Quaternion rotation, finite differences, and the planar radar
// geometry generator live here.
#pragma once

#include <array>
#include <cmath>

namespace oracle {

// Hamilton quaternion (w, x, y, z) built from scratch; no Eigen, no carcal.
struct Quat {
    double w, x, y, z;

    static Quat from_axis_angle(double ax, double ay, double az, double angle) {
        const double h = 0.5 * angle;
        const double s = std::sin(h);
        return {std::cos(h), s * ax, s * ay, s * az};
    }

    Quat operator*(const Quat& o) const {
        return {w * o.w - x * o.x - y * o.y - z * o.z,
                w * o.x + x * o.w + y * o.z - z * o.y,
                w * o.y - x * o.z + y * o.w + z * o.x,
                w * o.z + x * o.y - y * o.x + z * o.w};
    }

    Quat conj() const { return {w, -x, -y, -z}; }

    std::array<double, 3> rotate(const std::array<double, 3>& v) const {
        const Quat p{0.0, v[0], v[1], v[2]};
        const Quat r = (*this) * p * conj();
        return {r.x, r.y, r.z};
    }

    // Column-major-agnostic 3x3 entries: m[row][col].
    std::array<std::array<double, 3>, 3> matrix() const {
        std::array<std::array<double, 3>, 3> m{};
        const std::array<std::array<double, 3>, 3> basis = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
        for (int c = 0; c < 3; ++c) {
            const auto col = rotate(basis[c]);
            for (int r = 0; r < 3; ++r) m[r][c] = col[r];
        }
        return m;
    }
};

// Z-Y-X Euler composition via quaternions.
inline Quat quat_zyx(double yaw, double pitch, double roll) {
    return Quat::from_axis_angle(0, 0, 1, yaw) * Quat::from_axis_angle(0, 1, 0, pitch) *
           Quat::from_axis_angle(1, 0, 0, roll);
}

template <typename F>
double central_diff1(F&& f, double t, double h) {
    return (f(t + h) - f(t - h)) / (2.0 * h);
}

template <typename F>
double central_diff2(F&& f, double t, double h) {
    return (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
}

// Planar radar measurement of a point target from an ego pose. Azimuth is
// measured from the sensor forward axis, counter-clockwise positive; doppler
// is positive toward the sensor.
struct RadarMeas {
    double range;
    double azimuth;
    double doppler;
};

inline RadarMeas radar_measure(double ego_x, double ego_y, double heading, double speed,
                               double mount_yaw, double obj_x, double obj_y,
                               double obj_vx = 0.0, double obj_vy = 0.0) {
    const double rx = obj_x - ego_x;
    const double ry = obj_y - ego_y;
    const double range = std::hypot(rx, ry);
    const double bearing = std::atan2(ry, rx);
    double az = bearing - heading - mount_yaw;
    az = std::remainder(az, 2.0 * M_PI);
    const double rel_vx = obj_vx - speed * std::cos(heading);
    const double rel_vy = obj_vy - speed * std::sin(heading);
    const double range_rate = (rx * rel_vx + ry * rel_vy) / range;
    return {range, az, -range_rate};
}

}  // namespace oracle
