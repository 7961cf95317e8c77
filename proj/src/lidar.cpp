#include "carcal/lidar.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

namespace carcal {

namespace {

void canonicalize(PlaneModel& p) {
    const double n = p.normal.norm();
    if (n < 1e-12) {
        throw Error(errc::invalid_input, "plane normal has zero norm");
    }
    p.normal /= n;
    p.d /= n;
    if (p.normal.z() < 0.0) {
        p.normal = -p.normal;
        p.d = -p.d;
    }
}

double plane_abs_dist(const PlaneModel& p, const Vec3& q) {
    return std::abs(p.normal.dot(q) + p.d);
}

int count_inliers(std::span<const Vec3> pts, const PlaneModel& p, double tol) {
    int n = 0;
    for (const auto& q : pts) {
        if (plane_abs_dist(p, q) < tol) ++n;
    }
    return n;
}

double rms_of_inliers(std::span<const Vec3> pts, const PlaneModel& p, double tol) {
    double acc = 0.0;
    int n = 0;
    for (const auto& q : pts) {
        const double d = p.normal.dot(q) + p.d;
        if (std::abs(d) < tol) {
            acc += d * d;
            ++n;
        }
    }
    return n > 0 ? std::sqrt(acc / n) : 0.0;
}

}  // namespace

PointCloudFrame filter_points(const PointCloudFrame& frame, double r_min, double r_max) {
    if (!(r_min >= 0.0) || !(r_min < r_max)) {
        throw Error(errc::invalid_input, "filter_points: need 0 <= r_min < r_max");
    }
    PointCloudFrame out;
    out.t = frame.t;
    out.points.reserve(frame.points.size());
    for (const auto& p : frame.points) {
        const double r = std::hypot(p.x(), p.y());
        if (r >= r_min && r <= r_max) out.points.push_back(p);
    }
    return out;
}

PlaneModel ransac_plane_multi(std::span<const Vec3> points, int runs, int iterations_per_run,
                              double inlier_tol, uint64_t rng_seed) {
    if (points.size() < 3) {
        throw Error(errc::invalid_input, "ransac_plane_multi: need at least 3 points");
    }
    if (runs < 1 || iterations_per_run < 1 || !(inlier_tol > 0.0)) {
        throw Error(errc::invalid_input, "ransac_plane_multi: bad parameters");
    }

    bool found = false;
    PlaneModel best;
    double best_rms = 0.0;
    for (int run = 0; run < runs; ++run) {
        std::mt19937_64 rng(rng_seed + static_cast<uint64_t>(run) * 0x9e3779b97f4a7c15ull);
        std::uniform_int_distribution<size_t> pick(0, points.size() - 1);
        for (int it = 0; it < iterations_per_run; ++it) {
            const size_t i = pick(rng), j = pick(rng), k = pick(rng);
            if (i == j || j == k || i == k) continue;
            const Vec3 n = (points[j] - points[i]).cross(points[k] - points[i]);
            if (n.norm() < 1e-9) continue;  // collinear sample
            PlaneModel cand;
            cand.normal = n;
            cand.d = -n.dot(points[i]);
            canonicalize(cand);
            cand.inlier_count = count_inliers(points, cand, inlier_tol);
            if (!found || cand.inlier_count > best.inlier_count) {
                cand.rms = rms_of_inliers(points, cand, inlier_tol);
                best = cand;
                best_rms = cand.rms;
                found = true;
            } else if (cand.inlier_count == best.inlier_count) {
                cand.rms = rms_of_inliers(points, cand, inlier_tol);
                if (cand.rms < best_rms) {
                    best = cand;
                    best_rms = cand.rms;
                }
            }
        }
    }
    if (!found) {
        throw Error(errc::degenerate_hypothesis,
                    "ransac_plane_multi: no non-collinear sample found");
    }
    return best;
}

PlaneModel refine_plane_random_search(std::span<const Vec3> points, const PlaneModel& start,
                                      double angle_range, double d_range, int samples, int rounds,
                                      uint64_t rng_seed, double inlier_tol) {
    if (samples < 1 || rounds < 1 || !(angle_range >= 0.0) || !(d_range >= 0.0) ||
        !(inlier_tol > 0.0)) {
        throw Error(errc::invalid_input, "refine_plane_random_search: bad parameters");
    }
    PlaneModel current = start;
    canonicalize(current);
    current.inlier_count = count_inliers(points, current, inlier_tol);

    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> tilt(0.0, angle_range);
    std::uniform_real_distribution<double> shift(-d_range, d_range);
    std::uniform_real_distribution<double> dir(0.0, 2.0 * kPi);

    for (int round = 0; round < rounds; ++round) {
        PlaneModel round_best = current;
        for (int s = 0; s < samples; ++s) {
            // tilt the normal about a random axis orthogonal to it
            const double phi = dir(rng);
            Vec3 u = current.normal.cross(Vec3::UnitX());
            if (u.norm() < 1e-6) u = current.normal.cross(Vec3::UnitY());
            u.normalize();
            const Vec3 v = current.normal.cross(u);
            const Vec3 axis = std::cos(phi) * u + std::sin(phi) * v;
            PlaneModel cand;
            cand.normal = rodrigues(axis, tilt(rng)) * current.normal;
            cand.d = current.d + shift(rng);
            canonicalize(cand);
            cand.inlier_count = count_inliers(points, cand, inlier_tol);
            if (cand.inlier_count > round_best.inlier_count) round_best = cand;
        }
        current = round_best;
    }
    current.rms = rms_of_inliers(points, current, inlier_tol);
    return current;
}

PlaneModel svd_plane_fit(std::span<const Vec3> inliers) {
    if (inliers.size() < 3) {
        throw Error(errc::invalid_input, "svd_plane_fit: need at least 3 points");
    }
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : inliers) centroid += p;
    centroid /= static_cast<double>(inliers.size());

    Mat3 cov = Mat3::Zero();
    for (const auto& p : inliers) {
        const Vec3 q = p - centroid;
        cov += q * q.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    // rank check: the two largest eigenvalues must be clearly nonzero
    if (es.eigenvalues()(1) < 1e-12 * std::max(1.0, es.eigenvalues()(2))) {
        throw Error(errc::invalid_input, "svd_plane_fit: points are collinear");
    }
    PlaneModel p;
    p.normal = es.eigenvectors().col(0);
    p.d = -p.normal.dot(centroid);
    canonicalize(p);
    double acc = 0.0;
    for (const auto& q : inliers) {
        const double r = p.normal.dot(q) + p.d;
        acc += r * r;
    }
    p.rms = std::sqrt(acc / static_cast<double>(inliers.size()));
    p.inlier_count = static_cast<int>(inliers.size());
    return p;
}

std::vector<Vec3> plane_inliers(std::span<const Vec3> points, const PlaneModel& plane,
                                double inlier_tol) {
    std::vector<Vec3> out;
    out.reserve(points.size());
    for (const auto& q : points) {
        if (plane_abs_dist(plane, q) < inlier_tol) out.push_back(q);
    }
    return out;
}

RotationHeight plane_to_rotation_height(const PlaneModel& plane) {
    PlaneModel p = plane;
    canonicalize(p);
    if (p.normal.z() <= 0.5) {
        throw Error(errc::not_ground_plane,
                    "plane_to_rotation_height: normal too far from vertical");
    }
    const Vec3 z_axis(0, 0, 1);
    const Vec3 cross = p.normal.cross(z_axis);
    Mat3 R;
    if (cross.norm() < 1e-12) {
        R = Mat3::Identity();
    } else {
        const double angle = std::acos(std::clamp(p.normal.dot(z_axis), -1.0, 1.0));
        R = rodrigues(cross.normalized(), angle);
    }
    return {R, p.d / p.normal.z()};
}

RollPitch plane_roll_pitch(const Vec3& normal) {
    Vec3 n = normal;
    const double nn = n.norm();
    if (nn < 1e-12) {
        throw Error(errc::invalid_input, "plane_roll_pitch: zero normal");
    }
    n /= nn;
    if (n.z() < 0) n = -n;
    return {std::atan2(n.y(), n.z()), -std::asin(std::clamp(n.x(), -1.0, 1.0))};
}

YawOffsetResult lidar_yaw_offset(std::span<const PoseSample> poses, const TrajectoryGates& gates) {
    return yaw_offset_from_poses(poses, gates);
}

namespace {

// Yaw rate per pose index from symmetric finite differences of the pose yaw.
std::vector<double> pose_yaw_rates(std::span<const PoseSample> poses) {
    std::vector<double> rates(poses.size(), 0.0);
    if (poses.size() < 2) return rates;
    for (size_t i = 0; i < poses.size(); ++i) {
        const size_t a = (i == 0) ? 0 : i - 1;
        const size_t b = (i + 1 == poses.size()) ? i : i + 1;
        const double dt = poses[b].t - poses[a].t;
        if (dt <= 0) continue;
        rates[i] = wrap_pi(poses[b].yaw_sensor - poses[a].yaw_sensor) / dt;
    }
    return rates;
}

double rate_at_time(std::span<const PoseSample> poses, std::span<const double> rates, double t) {
    // nearest pose sample
    size_t best = 0;
    double best_dt = std::abs(poses[0].t - t);
    size_t lo = 0, hi = poses.size() - 1;
    while (lo + 1 < hi) {
        const size_t mid = (lo + hi) / 2;
        if (poses[mid].t < t)
            lo = mid;
        else
            hi = mid;
    }
    for (size_t i : {lo, hi}) {
        const double dt = std::abs(poses[i].t - t);
        if (dt < best_dt) {
            best_dt = dt;
            best = i;
        }
    }
    return rates[best];
}

double linear_std(std::span<const double> v, double mean) {
    if (v.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

LidarEstimate calibrate_lidar(std::span<const PointCloudFrame> frames,
                              std::span<const PoseRecord> poses, const LidarCalibConfig& cfg) {
    if (frames.empty()) {
        throw Error(errc::no_valid_data, "calibrate_lidar: no point cloud frames");
    }
    if (poses.size() < static_cast<size_t>(cfg.spline_degree) + 1) {
        throw Error(errc::invalid_input, "calibrate_lidar: too few poses for the trajectory fit");
    }
    const std::vector<PoseSample> samples = to_samples(poses);
    const std::vector<double> rates = pose_yaw_rates(samples);

    std::vector<double> rolls, pitches, heights;
    const int stride = std::max(1, cfg.frame_stride);
    for (size_t i = 0; i < frames.size(); i += static_cast<size_t>(stride)) {
        const auto& frame = frames[i];
        if (std::abs(rate_at_time(samples, rates, frame.t)) >= cfg.yaw_rate_max) continue;
        const PointCloudFrame filtered = filter_points(frame, cfg.r_min, cfg.r_max);
        if (filtered.points.size() < static_cast<size_t>(cfg.min_ground_points)) continue;
        try {
            const uint64_t frame_seed = cfg.seed ^ (0xd1b54a32d192ed03ull * (i + 1));
            PlaneModel plane =
                ransac_plane_multi(filtered.points, cfg.ransac_runs, cfg.ransac_iterations,
                                   cfg.inlier_tol, frame_seed);
            plane = refine_plane_random_search(filtered.points, plane, cfg.refine_angle_range,
                                               cfg.refine_d_range, cfg.refine_samples,
                                               cfg.refine_rounds, frame_seed + 1, cfg.inlier_tol);
            const auto inliers = plane_inliers(filtered.points, plane, cfg.inlier_tol);
            if (inliers.size() < 3) continue;
            const PlaneModel final_plane = svd_plane_fit(inliers);
            const auto rh = plane_to_rotation_height(final_plane);
            const auto rp = plane_roll_pitch(final_plane.normal);
            rolls.push_back(rp.roll);
            pitches.push_back(rp.pitch);
            heights.push_back(rh.z);
        } catch (const Error&) {
            continue;  // frame without a usable ground plane
        }
    }
    if (rolls.empty()) {
        throw Error(errc::no_ground_plane, "calibrate_lidar: no ground plane in any frame");
    }

    LidarEstimate est;
    est.frames_used = static_cast<int>(rolls.size());
    est.roll = circular_mean(rolls);
    est.pitch = circular_mean(pitches);
    est.z = 0.0;
    for (double h : heights) est.z += h;
    est.z /= static_cast<double>(heights.size());
    est.roll_std = rolls.size() >= 2 ? circular_std(rolls) : 0.0;
    est.pitch_std = pitches.size() >= 2 ? circular_std(pitches) : 0.0;
    est.z_std = linear_std(heights, est.z);

    // level the pose stream by the estimated roll/pitch before extracting yaw
    const Mat3 level = (EulerYPR{0.0, est.pitch, est.roll}).matrix();
    const Vec3 fwd_leveled = level.transpose() * Vec3::UnitX();
    std::vector<PoseSample> leveled;
    leveled.reserve(poses.size());
    for (const auto& rec : poses) {
        PoseSample s = rec.sample();
        const Vec3 f = rec.rotation() * fwd_leveled;
        s.yaw_sensor = std::atan2(f.y(), f.x());
        leveled.push_back(s);
    }
    const YawOffsetResult yaw =
        yaw_offset_from_poses(leveled, cfg.gates, cfg.spline_degree, cfg.spline_ctrl_spacing);
    est.yaw = yaw.offset;
    est.yaw_std = yaw.dispersion;
    est.yaw_used_count = yaw.used_count;
    return est;
}

}  // namespace carcal
