#include "carcal/consistency.hpp"

#include <algorithm>
#include <cmath>

namespace carcal {

Method method_from_string(const std::string& name) {
    if (name == "camera") return Method::camera;
    if (name == "lidar") return Method::lidar;
    if (name == "gnss") return Method::gnss;
    if (name == "radar-velocity") return Method::radar_velocity;
    if (name == "radar-position") return Method::radar_position;
    throw Error(errc::bad_config, "unknown method '" + name + "'");
}

std::string method_name(Method m) {
    switch (m) {
        case Method::camera: return "camera";
        case Method::lidar: return "lidar";
        case Method::gnss: return "gnss";
        case Method::radar_velocity: return "radar-velocity";
        case Method::radar_position: return "radar-position";
    }
    return "?";
}

namespace {

struct TimeRange {
    double lo, hi;
};

TimeRange input_time_range(const ConsistencyInput& in) {
    switch (in.method) {
        case Method::gnss:
        case Method::lidar:
            if (in.poses.empty()) throw Error(errc::empty_input, "consistency: no poses");
            return {in.poses.front().t, in.poses.back().t};
        case Method::radar_velocity:
        case Method::radar_position: {
            if (in.radar.empty()) throw Error(errc::empty_input, "consistency: no radar points");
            double lo = in.radar.front().t, hi = in.radar.front().t;
            for (const auto& p : in.radar) {
                lo = std::min(lo, p.t);
                hi = std::max(hi, p.t);
            }
            return {lo, hi};
        }
        case Method::camera:
            if (in.vp.empty()) throw Error(errc::empty_input, "consistency: no VP rows");
            return {in.vp.front().t, in.vp.back().t};
    }
    throw Error(errc::bad_config, "consistency: bad method");
}

template <typename T>
std::vector<T> slice_by_time(const std::vector<T>& rows, double lo, double hi) {
    std::vector<T> out;
    for (const auto& r : rows) {
        if (r.t >= lo && r.t < hi) out.push_back(r);
    }
    return out;
}

SegmentEstimate run_segment(const ConsistencyInput& in, const MethodParams& prm, int index,
                            double lo, double hi) {
    SegmentEstimate seg;
    seg.index = index;
    seg.t_start = lo;
    seg.t_end = hi;
    try {
        switch (in.method) {
            case Method::gnss: {
                const auto poses = slice_by_time(in.poses, lo, hi);
                const auto est = gnss_yaw_offset(to_samples(poses), prm.gnss);
                seg.values = {{"yaw", est.yaw_offset}};
                break;
            }
            case Method::lidar: {
                const auto poses = slice_by_time(in.poses, lo, hi);
                const auto frames = slice_by_time(in.cloud_frames, lo, hi);
                LidarCalibConfig cfg = prm.lidar;
                cfg.seed = prm.lidar.seed + static_cast<uint64_t>(index) * 7919u;
                const auto est = calibrate_lidar(frames, poses, cfg);
                seg.values = {{"roll", est.roll},
                              {"pitch", est.pitch},
                              {"yaw", est.yaw},
                              {"z", est.z}};
                break;
            }
            case Method::radar_velocity: {
                const auto pts = slice_by_time(in.radar, lo, hi);
                const auto est = calibrate_radar_velocity(pts, prm.radar_velocity);
                seg.values = {{"yaw", est.yaw}};
                break;
            }
            case Method::radar_position: {
                const auto pts = slice_by_time(in.radar, lo, hi);
                RadarPositionConfig cfg = prm.radar_position;
                // segment windows are shorter than full runs; straight spans
                // must still fit inside them
                const auto est = calibrate_radar_position(pts, cfg);
                seg.values = {{"yaw", est.yaw}};
                break;
            }
            case Method::camera: {
                if (!in.intrinsics) {
                    throw Error(errc::bad_config, "camera consistency needs intrinsics");
                }
                const auto rows = slice_by_time(in.vp, lo, hi);
                const auto run = calibrate_camera(rows, *in.intrinsics, prm.camera);
                if (!run.has_aggregate) {
                    throw Error(errc::no_valid_data, "gate never opened in this segment");
                }
                seg.values = {{"roll", run.aggregate.roll},
                              {"pitch", run.aggregate.pitch},
                              {"yaw", run.aggregate.yaw}};
                break;
            }
        }
        seg.valid = true;
    } catch (const Error& e) {
        seg.valid = false;
        seg.error_code = e.code();
    }
    return seg;
}

std::vector<PoseSample> ego_samples(const ConsistencyInput& in) {
    std::vector<PoseSample> ego;
    if (!in.poses.empty()) {
        ego = to_samples(in.poses);
    } else if (!in.radar.empty()) {
        for (const auto& p : in.radar) {
            if (ego.empty() || p.t - ego.back().t > 1e-9) {
                ego.push_back({p.t, p.ego_x, p.ego_y, 0.0, 0.0});
            }
        }
    }
    return ego;
}

std::vector<std::pair<std::string, double>> dispersion(
    const std::vector<const SegmentEstimate*>& segs) {
    std::vector<std::pair<std::string, double>> out;
    if (segs.size() < 2) return out;
    for (size_t k = 0; k < segs.front()->values.size(); ++k) {
        const std::string& key = segs.front()->values[k].first;
        std::vector<double> vals;
        vals.reserve(segs.size());
        for (const auto* s : segs) vals.push_back(s->values[k].second);
        if (key == "z") {
            double mean = 0.0;
            for (double v : vals) mean += v;
            mean /= static_cast<double>(vals.size());
            double acc = 0.0;
            for (double v : vals) acc += (v - mean) * (v - mean);
            out.emplace_back(key, std::sqrt(acc / static_cast<double>(vals.size())));
        } else {
            out.emplace_back(key, circular_std(vals));
        }
    }
    return out;
}

}  // namespace

ConsistencyReport run_consistency(const ConsistencyInput& input, const MethodParams& params,
                                  double segment_length) {
    if (!(segment_length > 0.0)) {
        throw Error(errc::bad_config, "consistency: segment length must be positive");
    }
    const TimeRange range = input_time_range(input);
    if (range.hi - range.lo < 2.0 * segment_length) {
        throw Error(errc::no_valid_data,
                    "consistency: input shorter than two segment lengths");
    }
    const int n_segments = static_cast<int>(std::floor((range.hi - range.lo) / segment_length));
    if (n_segments < 2) {
        throw Error(errc::no_valid_data, "consistency: fewer than 2 complete segments");
    }

    // straight spans over the whole drive decide the straight-only subset
    std::vector<StraightSegment> spans;
    const auto ego = ego_samples(input);
    if (ego.size() >= 2) {
        spans = extract_straight_segments(ego, params.straights);
    }
    auto is_straight = [&](double lo, double hi) {
        for (const auto& s : spans) {
            if (lo >= s.t_start && hi <= s.t_end) return true;
        }
        return false;
    };

    ConsistencyReport rep;
    rep.method = input.method;
    rep.segment_length = segment_length;
    rep.segment_count = n_segments;
    for (int i = 0; i < n_segments; ++i) {
        const double lo = range.lo + i * segment_length;
        const double hi = lo + segment_length;
        SegmentEstimate seg = run_segment(input, params, i, lo, hi);
        seg.straight = is_straight(lo, hi);
        if (seg.valid) {
            ++rep.valid_count;
            if (seg.straight) ++rep.straight_count;
        }
        rep.segments.push_back(std::move(seg));
    }
    if (rep.valid_count < 2) {
        throw Error(errc::no_valid_data, "consistency: fewer than 2 segments produced estimates");
    }

    std::vector<const SegmentEstimate*> all, straight;
    for (const auto& s : rep.segments) {
        if (!s.valid) continue;
        all.push_back(&s);
        if (s.straight) straight.push_back(&s);
    }
    rep.std_all = dispersion(all);
    rep.std_straight = dispersion(straight);
    return rep;
}

}  // namespace carcal
