#include "carcal/radar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace carcal {

namespace {

double doppler_residual(const RadarPoint& p, double psi) {
    return std::abs(p.doppler - p.ego_speed * std::cos(p.azimuth + psi));
}

}  // namespace

double coarse_yaw_search(std::span<const RadarPoint> points, double search_half_range, double step,
                         double residual_tol) {
    if (points.empty()) {
        throw Error(errc::empty_input, "coarse_yaw_search: no radar points");
    }
    if (!(search_half_range > 0.0) || !(step > 0.0) || step > search_half_range ||
        !(residual_tol > 0.0)) {
        throw Error(errc::invalid_input, "coarse_yaw_search: bad search parameters");
    }
    int best_count = 0;
    double best_psi = 0.0;
    const int n_steps = static_cast<int>(std::floor(2.0 * search_half_range / step + 1e-9));
    for (int i = 0; i <= n_steps; ++i) {
        const double psi = -search_half_range + i * step;
        int count = 0;
        for (const auto& p : points) {
            if (doppler_residual(p, psi) < residual_tol) ++count;
        }
        if (count > best_count ||
            (count == best_count && count > 0 && std::abs(psi) < std::abs(best_psi) - 1e-15)) {
            best_count = count;
            best_psi = psi;
        }
    }
    if (best_count == 0) {
        throw Error(errc::no_consensus, "coarse_yaw_search: no candidate satisfies any point");
    }
    return best_psi;
}

std::vector<RadarPoint> select_static_points(std::span<const RadarPoint> points, double psi,
                                             double residual_tol) {
    if (!(residual_tol > 0.0)) {
        throw Error(errc::invalid_input, "select_static_points: tolerance must be positive");
    }
    std::vector<RadarPoint> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        if (doppler_residual(p, psi) < residual_tol) out.push_back(p);
    }
    return out;
}

double fit_cosine_yaw(std::span<const RadarPoint> static_points, double psi_init, double max_step,
                      double max_total_move) {
    if (static_points.size() < 2) {
        throw Error(errc::invalid_input, "fit_cosine_yaw: need at least 2 points");
    }
    for (const auto& p : static_points) {
        if (!(p.ego_speed > 0.0)) {
            throw Error(errc::invalid_input, "fit_cosine_yaw: ego speed must be positive");
        }
    }
    auto cost = [&](double psi) {
        double acc = 0.0;
        for (const auto& p : static_points) {
            const double r = p.doppler - p.ego_speed * std::cos(p.azimuth + psi);
            acc += r * r;
        }
        return acc;
    };

    double psi = psi_init;
    double current_cost = cost(psi);
    for (int it = 0; it < 50; ++it) {
        double jtj = 0.0, jtr = 0.0;
        for (const auto& p : static_points) {
            const double r = p.doppler - p.ego_speed * std::cos(p.azimuth + psi);
            const double J = p.ego_speed * std::sin(p.azimuth + psi);
            jtj += J * J;
            jtr += J * r;
        }
        if (jtj < 1e-12) {
            throw Error(errc::unobservable, "fit_cosine_yaw: gradient vanished");
        }
        double step = -jtr / jtj;
        step = std::clamp(step, -max_step, max_step);
        // damp until the cost does not increase
        double next = psi + step;
        double next_cost = cost(next);
        int halvings = 0;
        while (next_cost > current_cost && halvings < 20) {
            step *= 0.5;
            next = psi + step;
            next_cost = cost(next);
            ++halvings;
        }
        if (std::abs(step) < 1e-14) break;
        psi = next;
        current_cost = next_cost;
        psi = std::clamp(psi, psi_init - max_total_move, psi_init + max_total_move);
    }
    return psi;
}

std::vector<std::vector<RadarPoint>> split_frames(std::span<const RadarPoint> points) {
    std::vector<RadarPoint> sorted(points.begin(), points.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const RadarPoint& a, const RadarPoint& b) { return a.t < b.t; });
    std::vector<std::vector<RadarPoint>> frames;
    for (const auto& p : sorted) {
        if (frames.empty() || p.t - frames.back().front().t > 1e-9) {
            frames.emplace_back();
        }
        frames.back().push_back(p);
    }
    return frames;
}

RadarEstimate refine_yaw_iterative(std::span<const std::vector<RadarPoint>> frames,
                                   double psi_init, const RadarVelocityConfig& cfg,
                                   std::vector<double>* trace) {
    if (cfg.iterations < 1) {
        throw Error(errc::invalid_input, "refine_yaw_iterative: iterations must be >= 1");
    }
    if (frames.empty()) {
        throw Error(errc::empty_input, "refine_yaw_iterative: no frames");
    }
    double psi = psi_init;
    bool ever_updated = false;
    std::vector<double> recorded;
    const int burn_in =
        static_cast<int>(std::floor(cfg.iterations * std::clamp(cfg.burn_in_fraction, 0.0, 0.9)));
    int last_selected = 0;
    size_t last_frame_size = 1;
    for (int it = 0; it < cfg.iterations; ++it) {
        const auto& frame = frames[static_cast<size_t>(it) % frames.size()];
        const auto sel = select_static_points(frame, psi, cfg.residual_tol);
        if (sel.size() >= 2) {
            try {
                const double frame_opt = fit_cosine_yaw(sel, psi, 0.15, cfg.search_half_range);
                const double innovation = wrap_pi(frame_opt - psi);
                psi += std::clamp(cfg.update_gain * innovation, -cfg.max_step_per_iter,
                                  cfg.max_step_per_iter);
                ever_updated = true;
                last_selected = static_cast<int>(sel.size());
                last_frame_size = std::max<size_t>(frame.size(), 1);
            } catch (const Error&) {
                // unobservable frame, keep current estimate
            }
        }
        if (trace) trace->push_back(psi);
        if (it >= burn_in) recorded.push_back(psi);
    }
    if (!ever_updated) {
        throw Error(errc::no_valid_data, "refine_yaw_iterative: every frame was skipped");
    }
    RadarEstimate est;
    est.yaw = wrap_pi(circular_mean(recorded));
    est.method = RadarMethod::velocity;
    est.iterations = cfg.iterations;
    est.confidence_sum = static_cast<double>(last_selected) / static_cast<double>(last_frame_size);
    return est;
}

RadarEstimate calibrate_radar_velocity(std::span<const RadarPoint> points,
                                       const RadarVelocityConfig& cfg,
                                       std::vector<double>* trace) {
    const double coarse =
        coarse_yaw_search(points, cfg.search_half_range, cfg.search_step, cfg.residual_tol);
    const auto frames = split_frames(points);
    return refine_yaw_iterative(frames, coarse, cfg, trace);
}

std::vector<RadarObject> group_objects(std::span<const RadarPoint> points, int min_track_frames) {
    if (min_track_frames < 2) {
        throw Error(errc::invalid_input, "group_objects: min_track_frames must be >= 2");
    }
    const auto frames = split_frames(points);
    // frame index lookup by timestamp
    std::vector<double> frame_times;
    frame_times.reserve(frames.size());
    for (const auto& f : frames) frame_times.push_back(f.front().t);

    auto frame_of = [&](double t) {
        const auto it = std::lower_bound(frame_times.begin(), frame_times.end(), t - 1e-9);
        return static_cast<int>(it - frame_times.begin());
    };

    std::map<int, std::vector<RadarPoint>> by_id;
    for (const auto& f : frames) {
        for (const auto& p : f) by_id[p.track_id].push_back(p);
    }

    std::vector<RadarObject> objects;
    for (auto& [id, pts] : by_id) {
        RadarObject run;
        run.track_id = id;
        int prev_frame = -2;
        auto flush = [&]() {
            if (static_cast<int>(run.points.size()) >= min_track_frames) {
                objects.push_back(run);
            }
            run.points.clear();
        };
        for (const auto& p : pts) {
            const int fi = frame_of(p.t);
            if (fi == prev_frame) continue;  // duplicate id inside one frame, keep first
            if (fi != prev_frame + 1 && !run.points.empty()) flush();
            run.points.push_back(p);
            prev_frame = fi;
        }
        flush();
    }
    std::sort(objects.begin(), objects.end(), [](const RadarObject& a, const RadarObject& b) {
        if (a.points.front().t != b.points.front().t) {
            return a.points.front().t < b.points.front().t;
        }
        return a.track_id < b.track_id;
    });
    return objects;
}

bool is_static_object(const RadarObject& obj, double angle_tol, double d_min) {
    if (obj.points.size() < 2) {
        throw Error(errc::invalid_input, "is_static_object: object needs at least 2 points");
    }
    if (!(angle_tol > 0.0)) {
        throw Error(errc::invalid_input, "is_static_object: tolerance must be positive");
    }
    const RadarPoint& p0 = obj.points.front();
    bool informative = false;
    for (size_t i = 1; i < obj.points.size(); ++i) {
        const RadarPoint& pi = obj.points[i];
        const double d = std::hypot(pi.ego_x - p0.ego_x, pi.ego_y - p0.ego_y);
        if (d <= d_min) continue;
        informative = true;
        const double li = pi.range, l0 = p0.range;
        const double arg = (li * li + l0 * l0 - d * d) / (2.0 * li * l0);
        const double subtended = std::acos(std::clamp(arg, -1.0, 1.0));
        const double dtheta = std::abs(wrap_pi(pi.azimuth - p0.azimuth));
        if (std::abs(subtended - dtheta) >= angle_tol) return false;
    }
    if (!informative) {
        throw Error(errc::indeterminate, "is_static_object: no pair with a usable ego baseline");
    }
    return true;
}

double yaw_from_pair(const RadarPoint& p0, const RadarPoint& pi, double d_min, int side_hint) {
    const double d = std::hypot(pi.ego_x - p0.ego_x, pi.ego_y - p0.ego_y);
    if (d <= d_min) {
        throw Error(errc::degenerate_baseline, "yaw_from_pair: ego baseline too short");
    }
    const double l0 = p0.range, li = pi.range;
    const double ci = std::clamp((li * li + d * d - l0 * l0) / (2.0 * d * li), -1.0, 1.0);
    const double c0 = std::clamp((l0 * l0 + d * d - li * li) / (2.0 * d * l0), -1.0, 1.0);
    const double beta_i = std::acos(ci);
    const double beta_0 = std::acos(c0);
    if (std::sin(beta_i) < 1e-6 || std::sin(beta_0) < 1e-6) {
        throw Error(errc::collinear, "yaw_from_pair: target lies on the ego baseline");
    }
    // sign s selects the target side (left/right of the baseline); the
    // later-point angle is measured from the backward baseline, hence the
    // supplement
    auto candidate = [&](double s) {
        const double psi1 = s * (kPi - beta_i) - pi.azimuth;
        const double psi2 = s * beta_0 - p0.azimuth;
        return wrap_pi(std::atan2(std::sin(psi1) + std::sin(psi2),
                                  std::cos(psi1) + std::cos(psi2)));
    };
    if (side_hint > 0) return candidate(+1.0);
    if (side_hint < 0) return candidate(-1.0);
    const double psi_left = candidate(+1.0);
    const double psi_right = candidate(-1.0);
    if (p0.ego_speed > 0.0 && pi.ego_speed > 0.0) {
        const double res_left = doppler_residual(p0, psi_left) + doppler_residual(pi, psi_left);
        const double res_right = doppler_residual(p0, psi_right) + doppler_residual(pi, psi_right);
        return res_left <= res_right ? psi_left : psi_right;
    }
    return p0.azimuth >= 0.0 ? psi_left : psi_right;
}

int object_side(const RadarObject& obj, double min_swing) {
    // a static target left of the path drifts toward larger azimuths while
    // the ego passes it, and vice versa; the telescoped wrap-sum is immune to
    // per-point noise
    double swing = 0.0;
    for (size_t i = 1; i < obj.points.size(); ++i) {
        swing += wrap_pi(obj.points[i].azimuth - obj.points[i - 1].azimuth);
    }
    if (std::abs(swing) < min_swing) return 0;
    return swing > 0.0 ? 1 : -1;
}

double estimation_confidence(const RadarPoint& p, double psi) {
    if (!(p.ego_speed > 0.0)) {
        throw Error(errc::invalid_input, "estimation_confidence: ego speed must be positive");
    }
    const double c = std::cos(p.azimuth + psi);
    if (std::abs(c) <= 1e-3) return 0.0;
    const double val = 1.0 - std::abs(p.doppler / c - p.ego_speed) / p.ego_speed;
    return std::clamp(val, 0.0, 1.0);
}

RadarEstimate weighted_yaw(std::span<const double> yaws, std::span<const double> confidences) {
    RadarEstimate est;
    est.method = RadarMethod::position;
    est.yaw = circular_mean_weighted(yaws, confidences);
    for (double c : confidences) est.confidence_sum += c;
    return est;
}

RadarEstimate calibrate_radar_position(std::span<const RadarPoint> points,
                                       const RadarPositionConfig& cfg) {
    if (points.empty()) {
        throw Error(errc::empty_input, "calibrate_radar_position: no radar points");
    }
    // ego path from the unique frame timestamps
    const auto frames = split_frames(points);
    std::vector<PoseSample> ego;
    ego.reserve(frames.size());
    for (const auto& f : frames) {
        ego.push_back({f.front().t, f.front().ego_x, f.front().ego_y, 0.0, 0.0});
    }
    const auto segments = extract_straight_segments(ego, cfg.segments);
    if (segments.empty()) {
        throw Error(errc::no_straight_segment, "calibrate_radar_position: no straight segment");
    }

    // instantaneous ego heading per frame; pairs whose endpoints deviate from
    // the segment direction would reference their azimuths off-baseline
    std::vector<double> ego_heading(ego.size(), std::numeric_limits<double>::quiet_NaN());
    for (size_t i = 0; i < ego.size(); ++i) {
        const size_t a = (i == 0) ? 0 : i - 1;
        const size_t b = (i + 1 == ego.size()) ? i : i + 1;
        const double dx = ego[b].x - ego[a].x;
        const double dy = ego[b].y - ego[a].y;
        if (std::hypot(dx, dy) > 1e-6) ego_heading[i] = std::atan2(dy, dx);
    }
    auto heading_near = [&](double t, double ref) {
        const auto it = std::lower_bound(ego.begin(), ego.end(), t - 1e-9,
                                         [](const PoseSample& s, double v) { return s.t < v; });
        if (it == ego.end()) return false;
        const double h = ego_heading[static_cast<size_t>(it - ego.begin())];
        return std::isfinite(h) && std::abs(wrap_pi(h - ref)) <= cfg.pair_heading_tol;
    };

    std::vector<double> yaws, confs;
    int objects_used = 0;
    for (const auto& seg : segments) {
        std::vector<RadarPoint> in_segment;
        for (const auto& p : points) {
            if (p.t >= seg.t_start && p.t <= seg.t_end) in_segment.push_back(p);
        }
        if (in_segment.empty()) continue;
        for (const auto& obj : group_objects(in_segment, cfg.min_track_frames)) {
            bool is_static = false;
            try {
                is_static = is_static_object(obj, cfg.pair_angle_tol, cfg.d_min);
            } catch (const Error&) {
                continue;  // no informative baseline
            }
            if (!is_static) continue;
            const size_t before = yaws.size();
            if (!heading_near(obj.points.front().t, seg.mean_heading)) continue;
            const int side = object_side(obj);
            for (size_t i = 1; i < obj.points.size(); ++i) {
                if (!heading_near(obj.points[i].t, seg.mean_heading)) continue;
                double psi;
                try {
                    psi = yaw_from_pair(obj.points.front(), obj.points[i], cfg.d_min, side);
                } catch (const Error&) {
                    continue;  // short baseline or collinear geometry
                }
                const double c = estimation_confidence(obj.points[i], psi);
                if (c > 0.0) {
                    yaws.push_back(psi);
                    confs.push_back(c);
                }
            }
            if (yaws.size() > before) ++objects_used;
        }
    }
    if (objects_used == 0 || yaws.empty()) {
        throw Error(errc::no_static_object,
                    "calibrate_radar_position: no stationary object produced an estimate");
    }
    RadarEstimate est = weighted_yaw(yaws, confs);
    est.objects_used = objects_used;
    return est;
}

}  // namespace carcal
