#include "carcal/geom.hpp"

#include <algorithm>
#include <cmath>

namespace carcal {

double wrap_pi(double a) {
    double w = std::remainder(a, 2.0 * kPi);
    if (w <= -kPi) w += 2.0 * kPi;
    return w;
}

double wrap_half_pi(double a) {
    double w = std::remainder(a, kPi);
    if (w <= -kPi / 2.0) w += kPi;
    return w;
}

Mat3 EulerYPR::matrix() const {
    const double cy = std::cos(yaw), sy = std::sin(yaw);
    const double cp = std::cos(pitch), sp = std::sin(pitch);
    const double cr = std::cos(roll), sr = std::sin(roll);
    Mat3 R;
    R << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
         sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
         -sp,     cp * sr,                cp * cr;
    return R;
}

EulerYPR EulerYPR::from_matrix(const Mat3& R) {
    EulerYPR e;
    const double sp = std::clamp(-R(2, 0), -1.0, 1.0);
    e.pitch = std::asin(sp);
    if (std::abs(std::cos(e.pitch)) > 1e-9) {
        e.yaw = wrap_pi(std::atan2(R(1, 0), R(0, 0)));
        e.roll = wrap_pi(std::atan2(R(2, 1), R(2, 2)));
    } else {
        // gimbal lock: only yaw +- roll observable
        e.roll = 0.0;
        e.yaw = wrap_pi(std::atan2(-R(0, 1), R(1, 1)));
    }
    return e;
}

Mat3 skew(const Vec3& v) {
    Mat3 S;
    S <<     0, -v.z(),  v.y(),
         v.z(),      0, -v.x(),
        -v.y(),  v.x(),      0;
    return S;
}

Mat3 rodrigues(const Vec3& axis, double angle) {
    if (!std::isfinite(angle)) {
        throw Error(errc::invalid_input, "rodrigues: angle is not finite");
    }
    if (std::abs(axis.norm() - 1.0) > 1e-6) {
        throw Error(errc::invalid_input, "rodrigues: axis must be unit length");
    }
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return c * Mat3::Identity() + (1.0 - c) * axis * axis.transpose() + s * skew(axis);
}

AxisAngle rotation_between(const Vec3& from, const Vec3& to) {
    if (std::abs(from.norm() - 1.0) > 1e-6 || std::abs(to.norm() - 1.0) > 1e-6) {
        throw Error(errc::invalid_input, "rotation_between: inputs must be unit vectors");
    }
    const Vec3 cross = from.cross(to);
    const double cn = cross.norm();
    const double dot = std::clamp(from.dot(to), -1.0, 1.0);
    if (cn < 1e-9) {
        if (dot > 0.0) return {Vec3(0, 0, 1), 0.0};
        throw Error(errc::antiparallel, "rotation_between: antiparallel inputs, axis undefined");
    }
    return {cross / cn, std::acos(dot)};
}

namespace {

struct Resultant {
    double s = 0.0;
    double c = 0.0;
    double wsum = 0.0;
};

Resultant resultant_of(std::span<const double> angles, std::span<const double>* weights) {
    Resultant r;
    for (size_t i = 0; i < angles.size(); ++i) {
        const double w = weights ? (*weights)[i] : 1.0;
        r.s += w * std::sin(angles[i]);
        r.c += w * std::cos(angles[i]);
        r.wsum += w;
    }
    return r;
}

}  // namespace

double circular_mean(std::span<const double> angles) {
    if (angles.empty()) {
        throw Error(errc::empty_input, "circular_mean: empty angle list");
    }
    const Resultant r = resultant_of(angles, nullptr);
    if (std::hypot(r.s, r.c) / r.wsum < 1e-9) {
        throw Error(errc::degenerate_mean, "circular_mean: resultant vanishes (antipodal inputs)");
    }
    return wrap_pi(std::atan2(r.s, r.c));
}

double circular_mean_weighted(std::span<const double> angles, std::span<const double> weights) {
    if (angles.empty()) {
        throw Error(errc::empty_input, "circular_mean_weighted: empty angle list");
    }
    if (angles.size() != weights.size()) {
        throw Error(errc::invalid_input, "circular_mean_weighted: size mismatch");
    }
    for (double w : weights) {
        if (!(w >= 0.0)) {
            throw Error(errc::invalid_input, "circular_mean_weighted: negative weight");
        }
    }
    const Resultant r = resultant_of(angles, &weights);
    if (r.wsum <= 0.0) {
        throw Error(errc::zero_confidence, "circular_mean_weighted: total weight is zero");
    }
    if (std::hypot(r.s, r.c) / r.wsum < 1e-9) {
        throw Error(errc::degenerate_mean, "circular_mean_weighted: resultant vanishes");
    }
    return wrap_pi(std::atan2(r.s, r.c));
}

double circular_std(std::span<const double> angles) {
    if (angles.size() < 2) {
        throw Error(errc::empty_input, "circular_std: need at least 2 angles");
    }
    const Resultant r = resultant_of(angles, nullptr);
    double rbar = std::hypot(r.s, r.c) / static_cast<double>(angles.size());
    rbar = std::clamp(rbar, 1e-300, 1.0);
    // identical inputs land within one ulp of a full resultant
    if (rbar >= 1.0 - 1e-15) return 0.0;
    return std::sqrt(-2.0 * std::log(rbar));
}

}  // namespace carcal
