#include "carcal/camera.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

namespace carcal {

Mat3 Intrinsics::K() const {
    if (!(fx > 0.0) || !(fy > 0.0)) {
        throw Error(errc::invalid_input, "intrinsics: fx and fy must be positive");
    }
    Mat3 K;
    K << fx, skew, cx,
         0,  fy,   cy,
         0,  0,    1;
    return K;
}

Mat3 Intrinsics::K_inv() const {
    Mat3 Ki;
    Ki << 1.0 / fx, -skew / (fx * fy), (skew * cy - cx * fy) / (fx * fy),
          0,        1.0 / fy,          -cy / fy,
          0,        0,                 1;
    return Ki;
}

Vec3 LineSeg2D::hom_line() const {
    if (std::hypot(u2 - u1, v2 - v1) < 1.0) {
        throw Error(errc::invalid_input, "line segment endpoints closer than 1 px");
    }
    const Vec3 p1(u1, v1, 1.0);
    const Vec3 p2(u2, v2, 1.0);
    return p1.cross(p2);
}

double line_vp_distance(const Vec3& line, const Vec3& vp_h) {
    const double ln = line.norm();
    const double pn = vp_h.norm();
    if (ln < 1e-12 || pn < 1e-12) {
        throw Error(errc::invalid_input, "line_vp_distance: zero-norm input");
    }
    return std::abs(line.dot(vp_h)) / (ln * pn);
}

bool classify_line(const LineSeg2D& line, const Vec3& vp_h, double d_th) {
    if (!(d_th > 0.0)) {
        throw Error(errc::invalid_input, "classify_line: d_th must be positive");
    }
    return line_vp_distance(line.hom_line(), vp_h) < d_th;
}

VPEstimate estimate_vp_from_lines(std::span<const LineSeg2D> lines, double d_th, int iterations,
                                  uint64_t rng_seed) {
    if (lines.size() < 2) {
        throw Error(errc::invalid_input, "estimate_vp_from_lines: need at least 2 lines");
    }
    std::vector<Vec3> hom;
    hom.reserve(lines.size());
    for (const auto& l : lines) hom.push_back(l.hom_line());

    std::mt19937_64 rng(rng_seed);
    std::uniform_int_distribution<size_t> pick(0, lines.size() - 1);

    int best_count = -1;
    double best_residual = 0.0;
    Vec3 best_vp = Vec3::Zero();
    const int pair_budget = std::max<int>(iterations, 1);
    for (int it = 0; it < pair_budget; ++it) {
        size_t i = pick(rng), j = pick(rng);
        if (i == j) continue;
        Vec3 vp = hom[i].cross(hom[j]);
        // points at infinity (parallel pair) cannot be dehomogenized
        if (std::abs(vp.z()) < 1e-9 * vp.head<2>().norm() || vp.norm() < 1e-12) continue;
        int count = 0;
        double residual = 0.0;
        for (const auto& l : hom) {
            const double d = line_vp_distance(l, vp);
            if (d < d_th) {
                ++count;
                residual += d;
            }
        }
        // ties go to the hypothesis its inliers fit best
        if (count > best_count || (count == best_count && residual < best_residual)) {
            best_count = count;
            best_residual = residual;
            best_vp = vp;
        }
    }
    if (best_count < 0) {
        throw Error(errc::degenerate_hypothesis,
                    "estimate_vp_from_lines: all sampled line pairs were parallel");
    }

    // refine: least-squares intersection of the inliers of the best hypothesis
    Mat3 M = Mat3::Zero();
    int inliers = 0;
    for (const auto& l : hom) {
        if (line_vp_distance(l, best_vp) < d_th) {
            const Vec3 ln = l / l.norm();
            M += ln * ln.transpose();
            ++inliers;
        }
    }
    if (inliers >= 2) {
        Eigen::SelfAdjointEigenSolver<Mat3> es(M);
        const Vec3 refined = es.eigenvectors().col(0);
        if (std::abs(refined.z()) > 1e-12) {
            // keep the refinement only if it does not lose consensus
            int refined_count = 0;
            for (const auto& l : hom) {
                if (line_vp_distance(l, refined) < d_th) ++refined_count;
            }
            if (refined_count >= inliers) {
                best_vp = refined;
                inliers = refined_count;
            }
        }
    }
    return {best_vp.x() / best_vp.z(), best_vp.y() / best_vp.z(), inliers};
}

YawPitch vp_to_yaw_pitch(double vp_u, double vp_v, const Intrinsics& K) {
    const Vec3 d = K.K_inv() * Vec3(vp_u, vp_v, 1.0);
    const Vec3 r = d / d.norm();
    if (r.z() <= 1e-6) {
        throw Error(errc::behind_camera, "vp_to_yaw_pitch: direction not in front of camera");
    }
    if (std::abs(r.y()) > 1.0 - 1e-9) {
        throw Error(errc::arcsin_domain, "vp_to_yaw_pitch: arcsin argument out of range");
    }
    return {std::asin(r.y()), -std::atan2(r.x(), r.z())};
}

double roll_from_hl(double hl_theta) {
    if (!std::isfinite(hl_theta)) {
        throw Error(errc::invalid_input, "roll_from_hl: non-finite angle");
    }
    return wrap_half_pi(hl_theta);
}

StabilityGate::StabilityGate(int window_n, double std_threshold)
    : window_n_(window_n), std_threshold_(std_threshold) {
    if (window_n < 2) {
        throw Error(errc::invalid_input, "StabilityGate: window must hold at least 2 frames");
    }
    if (!(std_threshold > 0.0)) {
        throw Error(errc::invalid_input, "StabilityGate: threshold must be positive");
    }
}

std::optional<CameraEstimate> StabilityGate::push(const AngleTriple& frame) {
    ++frames_seen_;
    window_.push_back(frame);
    if (window_.size() > static_cast<size_t>(window_n_)) window_.pop_front();
    if (window_.size() < static_cast<size_t>(window_n_)) return std::nullopt;

    std::vector<double> rolls, pitches, yaws;
    rolls.reserve(window_.size());
    pitches.reserve(window_.size());
    yaws.reserve(window_.size());
    for (const auto& a : window_) {
        rolls.push_back(a.roll);
        pitches.push_back(a.pitch);
        yaws.push_back(a.yaw);
    }
    const double sr = circular_std(rolls);
    const double sp = circular_std(pitches);
    const double sy = circular_std(yaws);
    const double worst = std::max({sr, sp, sy});
    if (worst > std_threshold_) return std::nullopt;

    CameraEstimate e;
    e.roll = circular_mean(rolls);
    e.pitch = circular_mean(pitches);
    e.yaw = circular_mean(yaws);
    e.window_std = worst;
    e.frame_count = static_cast<int>(frames_seen_);
    return e;
}

namespace {

CameraRunResult run_gate(const std::vector<std::pair<bool, AngleTriple>>& frames,
                         const CameraConfig& cfg, bool roll_available) {
    CameraRunResult out;
    out.roll_available = roll_available;
    StabilityGate gate(cfg.window_n, cfg.std_threshold);
    for (const auto& [ok, tri] : frames) {
        ++out.frames_in;
        if (!ok) {
            ++out.frames_skipped;
            continue;
        }
        if (auto e = gate.push(tri)) out.emissions.push_back(*e);
    }
    if (!out.emissions.empty()) {
        std::vector<double> r, p, y;
        for (const auto& e : out.emissions) {
            r.push_back(e.roll);
            p.push_back(e.pitch);
            y.push_back(e.yaw);
        }
        out.has_aggregate = true;
        out.aggregate = {circular_mean(r), circular_mean(p), circular_mean(y)};
        if (out.emissions.size() >= 2) {
            out.aggregate_std = {circular_std(r), circular_std(p), circular_std(y)};
        }
    }
    return out;
}

}  // namespace

CameraRunResult calibrate_camera(std::span<const VPObservation> observations, const Intrinsics& K,
                                 const CameraConfig& cfg) {
    std::vector<std::pair<bool, AngleTriple>> frames;
    frames.reserve(observations.size());
    for (const auto& obs : observations) {
        try {
            const auto yp = vp_to_yaw_pitch(obs.vp_u, obs.vp_v, K);
            frames.emplace_back(true, AngleTriple{roll_from_hl(obs.hl_theta), yp.pitch, yp.yaw});
        } catch (const Error&) {
            frames.emplace_back(false, AngleTriple{});
        }
    }
    return run_gate(frames, cfg, true);
}

CameraRunResult calibrate_camera_lines(std::span<const LineFrame> line_frames, const Intrinsics& K,
                                       const CameraConfig& cfg) {
    std::vector<std::pair<bool, AngleTriple>> frames;
    frames.reserve(line_frames.size());
    size_t index = 0;
    for (const auto& lf : line_frames) {
        try {
            const auto vp =
                estimate_vp_from_lines(lf.lines, cfg.d_th, cfg.vp_ransac_iterations,
                                       cfg.seed + index);
            const auto yp = vp_to_yaw_pitch(vp.u, vp.v, K);
            frames.emplace_back(true, AngleTriple{0.0, yp.pitch, yp.yaw});
        } catch (const Error&) {
            frames.emplace_back(false, AngleTriple{});
        }
        ++index;
    }
    return run_gate(frames, cfg, false);
}

}  // namespace carcal
