#include "carcal/trajectory.hpp"

#include <Eigen/Geometry>
#include <Eigen/Sparse>

#include <algorithm>
#include <array>
#include <cmath>

namespace carcal {

namespace {

constexpr int kMaxDegree = 7;

void validate_samples(std::span<const PoseSample> samples, int degree) {
    if (degree < 1 || degree > kMaxDegree) {
        throw Error(errc::invalid_input, "fit_spline: degree must be in [1, 7]");
    }
    if (samples.size() < static_cast<size_t>(degree) + 1) {
        throw Error(errc::invalid_input, "fit_spline: need at least degree+1 samples");
    }
    for (size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i].t) || !std::isfinite(samples[i].x) ||
            !std::isfinite(samples[i].y)) {
            throw Error(errc::invalid_input, "fit_spline: non-finite sample");
        }
        if (i > 0 && !(samples[i].t > samples[i - 1].t)) {
            throw Error(errc::invalid_input,
                        "fit_spline: timestamps must be strictly increasing (duplicate or "
                        "out-of-order t)");
        }
    }
}

// Basis functions and derivatives at parameter u for the span index i
// (algorithm A2.3 of the de Boor recurrence). ders[k][j] holds the k-th
// derivative of basis function (i - p + j).
void ders_basis_funs(int i, double u, int p, int nders, const std::vector<double>& U,
                     double ders[3][kMaxDegree + 1]) {
    double ndu[kMaxDegree + 1][kMaxDegree + 1];
    double a[2][kMaxDegree + 1];
    double left[kMaxDegree + 1], right[kMaxDegree + 1];

    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = u - U[static_cast<size_t>(i + 1 - j)];
        right[j] = U[static_cast<size_t>(i + j)] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    for (int j = 0; j <= p; ++j) ders[0][j] = ndu[j][p];

    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        a[0][0] = 1.0;
        for (int k = 1; k <= nders; ++k) {
            double d = 0.0;
            const int rk = r - k;
            const int pk = p - k;
            if (r >= k) {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            const int j1 = (rk >= -1) ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
                d += a[s2][j] * ndu[rk + j][pk];
            }
            if (r <= pk) {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::swap(s1, s2);
        }
    }
    double r = static_cast<double>(p);
    for (int k = 1; k <= nders; ++k) {
        for (int j = 0; j <= p; ++j) ders[k][j] *= r;
        r *= static_cast<double>(p - k);
    }
}

}  // namespace

Mat3 PoseRecord::rotation() const {
    Eigen::Quaterniond q(qw, qx, qy, qz);
    const double n = q.norm();
    if (!(n > 1e-6)) {
        throw Error(errc::invalid_input, "pose quaternion has near-zero norm");
    }
    q.normalize();
    return q.toRotationMatrix();
}

double PoseRecord::yaw_sensor() const {
    const Vec3 fwd = rotation() * Vec3::UnitX();
    return std::atan2(fwd.y(), fwd.x());
}

PoseSample PoseRecord::sample() const { return {t, x, y, z, yaw_sensor()}; }

std::vector<PoseSample> to_samples(std::span<const PoseRecord> records) {
    std::vector<PoseSample> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.sample());
    return out;
}

int TrajectorySpline::find_span(double u) const {
    const int p = degree_;
    const int n = static_cast<int>(ctrl_x_.size()) - 1;
    if (u >= knots_[static_cast<size_t>(n + 1)]) return n;
    if (u <= knots_[static_cast<size_t>(p)]) return p;
    int lo = p, hi = n + 1;
    int mid = (lo + hi) / 2;
    while (u < knots_[static_cast<size_t>(mid)] || u >= knots_[static_cast<size_t>(mid + 1)]) {
        if (u < knots_[static_cast<size_t>(mid)])
            hi = mid;
        else
            lo = mid;
        mid = (lo + hi) / 2;
    }
    return mid;
}

TrajectorySpline::State TrajectorySpline::eval(double t) const {
    const double lo = t_min(), hi = t_max();
    // absorb floating-point overshoot at the boundaries
    const double slack = 1e-9 * std::max(1.0, std::abs(hi) + std::abs(lo));
    if (t < lo - slack || t > hi + slack) {
        throw Error(errc::out_of_domain, "spline evaluation outside fitted time range");
    }
    const double u = std::clamp(t, lo, hi);
    const int p = degree_;
    const int span = find_span(u);
    double ders[3][kMaxDegree + 1];
    const int nders = std::min(2, p);
    ders_basis_funs(span, u, p, nders, knots_, ders);

    State s{0, 0, 0, 0, 0, 0};
    for (int j = 0; j <= p; ++j) {
        const size_t idx = static_cast<size_t>(span - p + j);
        s.x += ders[0][j] * ctrl_x_[idx];
        s.y += ders[0][j] * ctrl_y_[idx];
        s.xd += ders[1][j] * ctrl_x_[idx];
        s.yd += ders[1][j] * ctrl_y_[idx];
        if (nders >= 2) {
            s.xdd += ders[2][j] * ctrl_x_[idx];
            s.ydd += ders[2][j] * ctrl_y_[idx];
        }
    }
    return s;
}

TrajectorySpline fit_spline(std::span<const PoseSample> samples, int degree) {
    validate_samples(samples, degree);
    const int p = degree;
    const int n = static_cast<int>(samples.size());  // control point count

    TrajectorySpline sp;
    sp.degree_ = p;
    sp.knots_.assign(static_cast<size_t>(n + p + 1), 0.0);
    for (int i = 0; i <= p; ++i) {
        sp.knots_[static_cast<size_t>(i)] = samples.front().t;
        sp.knots_[static_cast<size_t>(n + i)] = samples.back().t;
    }
    // interior knots by parameter averaging keeps the collocation matrix
    // nonsingular (Schoenberg-Whitney)
    for (int j = 1; j <= n - p - 1; ++j) {
        double acc = 0.0;
        for (int i = j; i <= j + p - 1; ++i) acc += samples[static_cast<size_t>(i)].t;
        sp.knots_[static_cast<size_t>(j + p)] = acc / p;
    }
    sp.ctrl_x_.assign(static_cast<size_t>(n), 0.0);
    sp.ctrl_y_.assign(static_cast<size_t>(n), 0.0);

    Eigen::SparseMatrix<double> A(n, n);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(n) * (p + 1));
    double ders[3][kMaxDegree + 1];
    for (int r = 0; r < n; ++r) {
        const double u = samples[static_cast<size_t>(r)].t;
        const int span = sp.find_span(u);
        ders_basis_funs(span, u, p, 0, sp.knots_, ders);
        for (int j = 0; j <= p; ++j) {
            trips.emplace_back(r, span - p + j, ders[0][j]);
        }
    }
    A.setFromTriplets(trips.begin(), trips.end());

    Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
    solver.compute(A);
    if (solver.info() != Eigen::Success) {
        throw Error(errc::invalid_input, "fit_spline: singular collocation system");
    }
    Eigen::VectorXd bx(n), by(n);
    for (int r = 0; r < n; ++r) {
        bx[r] = samples[static_cast<size_t>(r)].x;
        by[r] = samples[static_cast<size_t>(r)].y;
    }
    const Eigen::VectorXd cx = solver.solve(bx);
    const Eigen::VectorXd cy = solver.solve(by);
    for (int i = 0; i < n; ++i) {
        sp.ctrl_x_[static_cast<size_t>(i)] = cx[i];
        sp.ctrl_y_[static_cast<size_t>(i)] = cy[i];
    }
    return sp;
}

TrajectorySpline fit_spline_approx(std::span<const PoseSample> samples, int degree,
                                   double ctrl_spacing_s) {
    validate_samples(samples, degree);
    if (!(ctrl_spacing_s > 0.0)) {
        throw Error(errc::invalid_input, "fit_spline_approx: control spacing must be positive");
    }
    const int p = degree;
    const int m = static_cast<int>(samples.size());
    const double t0 = samples.front().t, t1 = samples.back().t;
    const int n = std::min<int>(
        m, std::max(p + 1, static_cast<int>(std::ceil((t1 - t0) / ctrl_spacing_s)) + p));

    TrajectorySpline sp;
    sp.degree_ = p;
    sp.knots_.assign(static_cast<size_t>(n + p + 1), 0.0);
    for (int i = 0; i <= p; ++i) {
        sp.knots_[static_cast<size_t>(i)] = t0;
        sp.knots_[static_cast<size_t>(n + i)] = t1;
    }
    const int interior = n - p - 1;
    for (int j = 1; j <= interior; ++j) {
        sp.knots_[static_cast<size_t>(j + p)] = t0 + (t1 - t0) * j / (interior + 1);
    }
    sp.ctrl_x_.assign(static_cast<size_t>(n), 0.0);
    sp.ctrl_y_.assign(static_cast<size_t>(n), 0.0);

    Eigen::SparseMatrix<double> A(m, n);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(m) * (p + 1));
    double ders[3][kMaxDegree + 1];
    for (int r = 0; r < m; ++r) {
        const double u = samples[static_cast<size_t>(r)].t;
        const int span = sp.find_span(u);
        ders_basis_funs(span, u, p, 0, sp.knots_, ders);
        for (int j = 0; j <= p; ++j) trips.emplace_back(r, span - p + j, ders[0][j]);
    }
    A.setFromTriplets(trips.begin(), trips.end());

    Eigen::VectorXd bx(m), by(m);
    for (int r = 0; r < m; ++r) {
        bx[r] = samples[static_cast<size_t>(r)].x;
        by[r] = samples[static_cast<size_t>(r)].y;
    }
    Eigen::SparseMatrix<double> normal = Eigen::SparseMatrix<double>(A.transpose()) * A;
    // tiny ridge keeps control points with no data support bounded
    for (int i = 0; i < n; ++i) normal.coeffRef(i, i) += 1e-9;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    solver.compute(normal);
    if (solver.info() != Eigen::Success) {
        throw Error(errc::invalid_input, "fit_spline_approx: normal equations not SPD");
    }
    const Eigen::VectorXd cx = solver.solve(A.transpose() * bx);
    const Eigen::VectorXd cy = solver.solve(A.transpose() * by);
    for (int i = 0; i < n; ++i) {
        sp.ctrl_x_[static_cast<size_t>(i)] = cx[i];
        sp.ctrl_y_[static_cast<size_t>(i)] = cy[i];
    }
    return sp;
}

double heading_at(const TrajectorySpline& spline, double t) {
    const auto s = spline.eval(t);
    if (s.xd * s.xd + s.yd * s.yd < 1e-8) {
        throw Error(errc::standstill, "heading_at: speed below numerical floor");
    }
    return wrap_pi(std::atan2(s.yd, s.xd));
}

double speed_sq_at(const TrajectorySpline& spline, double t) {
    const auto s = spline.eval(t);
    return s.xd * s.xd + s.yd * s.yd;
}

CurvatureComponents curvature_components_at(const TrajectorySpline& spline, double t) {
    const auto s = spline.eval(t);
    const double cx = std::abs(s.xdd) / std::pow(1.0 + s.xd * s.xd, 1.5);
    const double cy = std::abs(s.ydd) / std::pow(1.0 + s.yd * s.yd, 1.5);
    return {cx, cy};
}

std::vector<double> valid_set(const TrajectorySpline& spline, std::span<const double> timestamps,
                              const TrajectoryGates& gates) {
    if (!(gates.v_min_sq > 0.0) || !(gates.c_max > 0.0)) {
        throw Error(errc::invalid_input, "valid_set: thresholds must be positive");
    }
    std::vector<double> kept;
    kept.reserve(timestamps.size());
    for (double t : timestamps) {
        const auto s = spline.eval(t);
        const double v_sq = s.xd * s.xd + s.yd * s.yd;
        if (v_sq < gates.v_min_sq) continue;
        const double cx = std::abs(s.xdd) / std::pow(1.0 + s.xd * s.xd, 1.5);
        const double cy = std::abs(s.ydd) / std::pow(1.0 + s.yd * s.yd, 1.5);
        if (std::max(cx, cy) > gates.c_max) continue;
        kept.push_back(t);
    }
    return kept;
}

namespace {

double point_chord_distance(const PoseSample& a, const PoseSample& b, const PoseSample& p) {
    const double ex = b.x - a.x, ey = b.y - a.y;
    const double len = std::hypot(ex, ey);
    if (len < 1e-9) return std::hypot(p.x - a.x, p.y - a.y);
    return std::abs(ex * (p.y - a.y) - ey * (p.x - a.x)) / len;
}

void simplify_recursive(std::span<const PoseSample> s, size_t lo, size_t hi, double tol,
                        std::vector<size_t>& breaks) {
    if (hi <= lo + 1) return;
    double worst = -1.0;
    size_t worst_i = lo;
    for (size_t i = lo + 1; i < hi; ++i) {
        const double d = point_chord_distance(s[lo], s[hi], s[i]);
        if (d > worst) {
            worst = d;
            worst_i = i;
        }
    }
    if (worst > tol) {
        breaks.push_back(worst_i);
        simplify_recursive(s, lo, worst_i, tol, breaks);
        simplify_recursive(s, worst_i, hi, tol, breaks);
    }
}

}  // namespace

std::vector<StraightSegment> extract_straight_segments(std::span<const PoseSample> samples,
                                                       const StraightSegmentParams& params) {
    if (samples.size() < 2) {
        throw Error(errc::invalid_input, "extract_straight_segments: need at least 2 samples");
    }
    std::vector<size_t> breaks{0, samples.size() - 1};
    simplify_recursive(samples, 0, samples.size() - 1, params.simplify_tol_m, breaks);
    std::sort(breaks.begin(), breaks.end());

    std::vector<StraightSegment> out;
    for (size_t k = 0; k + 1 < breaks.size(); ++k) {
        size_t a = breaks[k], b = breaks[k + 1];

        // split points of a smooth corner land inside the turn, so a leg can
        // carry a few curved samples at its ends; trim them instead of
        // dropping the leg
        auto step_ok = [&](size_t i, double dir) {
            const double sx = samples[i + 1].x - samples[i].x;
            const double sy = samples[i + 1].y - samples[i].y;
            if (std::hypot(sx, sy) < 0.01) return true;  // heading undefined at standstill
            return std::abs(wrap_pi(std::atan2(sy, sx) - dir)) <= params.max_heading_dev;
        };
        bool consistent = false;
        for (int pass = 0; pass < 4 && a < b; ++pass) {
            const double dir = std::atan2(samples[b].y - samples[a].y, samples[b].x - samples[a].x);
            size_t a2 = a, b2 = b;
            while (a2 < b2 && !step_ok(a2, dir)) ++a2;
            while (b2 > a2 && !step_ok(b2 - 1, dir)) --b2;
            consistent = true;
            for (size_t i = a2; i < b2; ++i) {
                if (!step_ok(i, dir)) {
                    consistent = false;
                    break;
                }
            }
            const bool stable = (a2 == a && b2 == b);
            a = a2;
            b = b2;
            if (consistent && stable) break;
            if (consistent) continue;  // re-derive the direction from the trimmed endpoints
        }
        if (!consistent || a >= b) continue;

        const double len = std::hypot(samples[b].x - samples[a].x, samples[b].y - samples[a].y);
        if (len < params.min_length_m) continue;
        std::vector<double> step_headings;
        for (size_t i = a; i < b; ++i) {
            const double sx = samples[i + 1].x - samples[i].x;
            const double sy = samples[i + 1].y - samples[i].y;
            if (std::hypot(sx, sy) < 0.01) continue;
            step_headings.push_back(std::atan2(sy, sx));
        }
        if (step_headings.empty()) continue;
        out.push_back({samples[a].t, samples[b].t, circular_mean(step_headings), len});
    }
    return out;
}

YawOffsetResult yaw_offset_from_poses(std::span<const PoseSample> samples,
                                      const TrajectoryGates& gates, int spline_degree,
                                      double approx_ctrl_spacing) {
    const TrajectorySpline sp = approx_ctrl_spacing > 0.0
                                    ? fit_spline_approx(samples, spline_degree, approx_ctrl_spacing)
                                    : fit_spline(samples, spline_degree);
    std::vector<double> ts;
    ts.reserve(samples.size());
    for (const auto& s : samples) ts.push_back(s.t);
    const std::vector<double> valid = valid_set(sp, ts, gates);
    if (valid.empty()) {
        throw Error(errc::no_valid_data, "yaw offset: no timestamps pass the speed/curvature gates");
    }
    // samples are time-sorted, so walk both lists in lockstep
    std::vector<double> diffs;
    diffs.reserve(valid.size());
    size_t j = 0;
    for (double t : valid) {
        while (j < samples.size() && samples[j].t < t) ++j;
        const double psi_sensor = samples[j].yaw_sensor;
        diffs.push_back(wrap_pi(psi_sensor - heading_at(sp, t)));
    }
    YawOffsetResult r;
    r.offset = circular_mean(diffs);
    r.used_count = static_cast<int>(diffs.size());
    r.dispersion = diffs.size() >= 2 ? circular_std(diffs) : 0.0;
    return r;
}

}  // namespace carcal
