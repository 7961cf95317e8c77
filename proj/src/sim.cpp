#include "carcal/sim.hpp"

#include <Eigen/Geometry>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <unordered_map>

#include "carcal/io.hpp"

namespace carcal::sim {

namespace {

// stream tags keep per-sensor RNG sequences independent of each other
constexpr uint64_t kGnssTag = 0x676e7373ull;
constexpr uint64_t kLidarTag = 0x6c696461ull;
constexpr uint64_t kRadarTag = 0x72616461ull;
constexpr uint64_t kCameraTag = 0x63616d72ull;
constexpr uint64_t kLandmarkTag = 0x6c616e64ull;

std::mt19937_64 stream_rng(uint64_t seed, uint64_t tag) {
    return std::mt19937_64(seed * 0x9e3779b97f4a7c15ull + tag);
}

Mat3 world_from_vehicle(double heading, double tilt_roll) {
    return EulerYPR{heading, 0.0, tilt_roll}.matrix();
}

PoseRecord make_pose(double t, double x, double y, double z, const Mat3& R) {
    Eigen::Quaterniond q(R);
    if (q.w() < 0) q.coeffs() = -q.coeffs();
    return {t, x, y, z, q.w(), q.x(), q.y(), q.z()};
}

int sample_count(double rate, double duration) {
    return static_cast<int>(std::floor(duration * rate)) + 1;
}

void validate_spec(const ScenarioSpec& spec) {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0)) throw Error(errc::bad_config, std::string(what) + " must be positive");
    };
    auto non_negative = [](double v, const char* what) {
        if (!(v >= 0.0)) throw Error(errc::bad_config, std::string(what) + " must be >= 0");
    };
    positive(spec.truth_rate, "truth_rate");
    positive(spec.gnss.rate, "gnss.rate");
    positive(spec.lidar.rate, "lidar.rate");
    positive(spec.radar.rate, "radar.rate");
    positive(spec.camera.rate, "camera.rate");
    non_negative(spec.gnss.sigma_pos, "gnss.noise.pos");
    non_negative(spec.gnss.sigma_yaw, "gnss.noise.yaw_deg");
    non_negative(spec.lidar.sigma_range, "lidar.noise.range");
    non_negative(spec.lidar.sigma_pose_yaw, "lidar.noise.pose_yaw_deg");
    non_negative(spec.radar.sigma_azimuth, "radar.noise.azimuth_deg");
    non_negative(spec.radar.sigma_range, "radar.noise.range");
    non_negative(spec.radar.sigma_doppler, "radar.noise.doppler");
    non_negative(spec.camera.sigma_vp_px, "camera.noise.vp_px");
    non_negative(spec.camera.sigma_hl, "camera.noise.hl_deg");
    non_negative(spec.radar.outliers_per_frame, "radar.outliers_per_frame");
    positive(spec.radar.fov, "radar.fov_deg");
    positive(spec.radar.max_range, "radar.max_range");
    if (spec.radar.landmark_count < 0 || spec.radar.mover_count < 0) {
        throw Error(errc::bad_config, "landmark/mover counts must be >= 0");
    }
    if (spec.radar.corridor_min < 0.0 || spec.radar.corridor < spec.radar.corridor_min) {
        throw Error(errc::bad_config, "radar corridor must be >= radar.corridor_min >= 0");
    }
    if (spec.lidar.points_per_frame < 0) {
        throw Error(errc::bad_config, "lidar.points_per_frame must be >= 0");
    }
    if (spec.lidar.clutter_fraction < 0.0 || spec.lidar.clutter_fraction > 1.0) {
        throw Error(errc::bad_config, "lidar.clutter_fraction must be in [0, 1]");
    }
}

}  // namespace

TruthTrajectory::TruthTrajectory(std::span<const RoutePrimitive> route) {
    if (route.empty()) {
        throw Error(errc::invalid_input, "route plan must contain at least one primitive");
    }
    double t = 0.0, x = 0.0, y = 0.0, h = 0.0;
    for (const auto& prim : route) {
        if (!(prim.duration > 0.0) || !(prim.speed > 0.0)) {
            throw Error(errc::invalid_input, "route primitive needs positive duration and speed");
        }
        if (prim.kind == RoutePrimitive::Kind::arc && std::abs(prim.radius) < 1e-6) {
            throw Error(errc::invalid_input, "arc primitive needs a nonzero radius");
        }
        Seg s;
        s.kind = prim.kind;
        s.t0 = t;
        s.t1 = t + prim.duration;
        s.x0 = x;
        s.y0 = y;
        s.h0 = h;
        s.speed = prim.speed;
        s.radius = prim.radius;
        segs_.push_back(s);
        // advance to the primitive end
        t = s.t1;
        if (prim.kind == RoutePrimitive::Kind::straight) {
            x += prim.speed * prim.duration * std::cos(h);
            y += prim.speed * prim.duration * std::sin(h);
        } else {
            const double w = prim.speed / prim.radius;
            const double h1 = h + w * prim.duration;
            x += prim.radius * (std::sin(h1) - std::sin(h));
            y += prim.radius * (-std::cos(h1) + std::cos(h));
            h = h1;
        }
    }
    duration_ = t;
}

TruthState TruthTrajectory::state(double t) const {
    const double tc = std::clamp(t, 0.0, duration_);
    size_t i = 0;
    while (i + 1 < segs_.size() && tc >= segs_[i].t1) ++i;
    const Seg& s = segs_[i];
    const double tau = tc - s.t0;
    TruthState st;
    st.t = t;
    st.speed = s.speed;
    if (s.kind == RoutePrimitive::Kind::straight) {
        st.x = s.x0 + s.speed * tau * std::cos(s.h0);
        st.y = s.y0 + s.speed * tau * std::sin(s.h0);
        st.heading = s.h0;
        st.yaw_rate = 0.0;
    } else {
        const double w = s.speed / s.radius;
        const double h = s.h0 + w * tau;
        st.x = s.x0 + s.radius * (std::sin(h) - std::sin(s.h0));
        st.y = s.y0 + s.radius * (-std::cos(h) + std::cos(s.h0));
        st.heading = h;
        st.yaw_rate = w;
    }
    st.heading = wrap_pi(st.heading);
    return st;
}

std::vector<TruthState> gen_trajectory(const ScenarioSpec& spec) {
    validate_spec(spec);
    const TruthTrajectory truth(spec.route);
    const int n = sample_count(spec.truth_rate, truth.duration());
    std::vector<TruthState> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        out.push_back(truth.state(i / spec.truth_rate));
    }
    return out;
}

std::vector<PoseRecord> gen_gnss(const ScenarioSpec& spec, const TruthTrajectory& truth) {
    validate_spec(spec);
    auto rng = stream_rng(spec.seed, kGnssTag);
    std::normal_distribution<double> pos_noise(0.0, 1.0);
    std::normal_distribution<double> yaw_noise(0.0, 1.0);
    const auto& prm = spec.gnss;
    const Mat3 mount = prm.mount.angles.matrix();
    std::vector<PoseRecord> out;
    const int n = sample_count(prm.rate, truth.duration());
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double t = i / prm.rate;
        const auto s = truth.state(t);
        const double tilt = spec.turn_roll_gain * s.yaw_rate;
        const double yn = prm.sigma_yaw > 0 ? prm.sigma_yaw * yaw_noise(rng) : 0.0;
        const Mat3 R = EulerYPR{s.heading + yn, 0.0, tilt}.matrix() * mount;
        const double px = s.x + (prm.sigma_pos > 0 ? prm.sigma_pos * pos_noise(rng) : 0.0);
        const double py = s.y + (prm.sigma_pos > 0 ? prm.sigma_pos * pos_noise(rng) : 0.0);
        const double pz = (prm.sigma_pos > 0 ? prm.sigma_pos * pos_noise(rng) : 0.0);
        out.push_back(make_pose(t, px, py, pz, R));
    }
    return out;
}

LidarOutput gen_lidar(const ScenarioSpec& spec, const TruthTrajectory& truth) {
    validate_spec(spec);
    auto rng = stream_rng(spec.seed, kLidarTag);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& prm = spec.lidar;
    const Mat3 mount = prm.mount.angles.matrix();
    const double h = prm.mount.height;
    if (!(h > 0.0)) {
        throw Error(errc::invalid_input, "lidar mount height must be positive");
    }

    LidarOutput out;
    const int n = sample_count(prm.rate, truth.duration());
    out.poses.reserve(static_cast<size_t>(n));
    out.frames.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double t = i / prm.rate;
        const auto s = truth.state(t);
        const double tilt = spec.turn_roll_gain * s.yaw_rate;
        const Mat3 R_ws = world_from_vehicle(s.heading, tilt) * mount;

        const double yn = prm.sigma_pose_yaw > 0 ? prm.sigma_pose_yaw * gauss(rng) : 0.0;
        const Mat3 R_reported = EulerYPR{s.heading + yn, 0.0, tilt}.matrix() * mount;
        out.poses.push_back(make_pose(t, s.x, s.y, h, R_reported));

        // ground plane in the sensor frame: n_s . p + h = 0
        const Vec3 n_s = R_ws.transpose() * Vec3::UnitZ();
        Vec3 e1 = n_s.cross(Vec3::UnitX());
        if (e1.norm() < 1e-6) e1 = n_s.cross(Vec3::UnitY());
        e1.normalize();
        const Vec3 e2 = n_s.cross(e1);

        PointCloudFrame frame;
        frame.t = t;
        frame.points.reserve(static_cast<size_t>(prm.points_per_frame));
        const int n_clutter =
            static_cast<int>(std::lround(prm.clutter_fraction * prm.points_per_frame));
        const int n_ground = prm.points_per_frame - n_clutter;
        const Vec3 foot = -h * n_s;
        for (int k = 0; k < n_ground; ++k) {
            const double rho = prm.ground_radius * std::sqrt(unit(rng));
            const double phi = 2.0 * kPi * unit(rng);
            Vec3 p = foot + rho * (std::cos(phi) * e1 + std::sin(phi) * e2);
            if (prm.sigma_range > 0) {
                const double r = p.norm();
                if (r > 1e-6) p += (prm.sigma_range * gauss(rng) / r) * p;
            }
            frame.points.push_back(p);
        }
        for (int k = 0; k < n_clutter; ++k) {
            // clutter floats clear of the ground so the plane stays clean
            const double cx = prm.ground_radius * (2.0 * unit(rng) - 1.0);
            const double cy = prm.ground_radius * (2.0 * unit(rng) - 1.0);
            const double cz = -h + 0.3 + (4.0 + h - 0.3) * unit(rng);
            frame.points.emplace_back(cx, cy, cz);
        }
        out.frames.push_back(std::move(frame));
    }
    return out;
}

std::vector<Landmark> place_landmarks(const ScenarioSpec& spec, const TruthTrajectory& truth) {
    validate_spec(spec);
    auto rng = stream_rng(spec.seed, kLandmarkTag);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& prm = spec.radar;
    std::vector<Landmark> out;
    out.reserve(static_cast<size_t>(prm.landmark_count + prm.mover_count));
    for (int i = 0; i < prm.landmark_count; ++i) {
        const double tau = unit(rng) * truth.duration();
        const auto s = truth.state(tau);
        const double side = unit(rng) < 0.5 ? -1.0 : 1.0;
        const double lat = side * (prm.corridor_min +
                                   (prm.corridor - prm.corridor_min) * unit(rng));
        Landmark lm;
        lm.x = s.x - lat * std::sin(s.heading);
        lm.y = s.y + lat * std::cos(s.heading);
        out.push_back(lm);
    }
    for (int i = 0; i < prm.mover_count; ++i) {
        const double tau = unit(rng) * truth.duration();
        const auto s = truth.state(tau);
        const double side = unit(rng) < 0.5 ? -1.0 : 1.0;
        const double lat = side * (prm.corridor_min +
                                   (prm.corridor - prm.corridor_min) * unit(rng));
        const double speed = 1.0 + 4.0 * unit(rng);
        const double dir = 2.0 * kPi * unit(rng);
        Landmark lm;
        lm.x = s.x - lat * std::sin(s.heading);
        lm.y = s.y + lat * std::cos(s.heading);
        lm.vx = speed * std::cos(dir);
        lm.vy = speed * std::sin(dir);
        out.push_back(lm);
    }
    return out;
}

std::vector<RadarPoint> gen_radar(const ScenarioSpec& spec, const TruthTrajectory& truth,
                                  std::span<const Landmark> landmarks) {
    validate_spec(spec);
    auto rng = stream_rng(spec.seed, kRadarTag);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& prm = spec.radar;
    const double psi = prm.mount.angles.yaw;

    std::vector<RadarPoint> out;
    std::vector<int> current_id(landmarks.size(), -1);
    int next_id = 0;
    const int n = sample_count(prm.rate, truth.duration());
    for (int fi = 0; fi < n; ++fi) {
        const double t = fi / prm.rate;
        const auto s = truth.state(t);
        const double ego_vx = s.speed * std::cos(s.heading);
        const double ego_vy = s.speed * std::sin(s.heading);
        for (size_t li = 0; li < landmarks.size(); ++li) {
            const auto& lm = landmarks[li];
            const double ox = lm.x + lm.vx * t;
            const double oy = lm.y + lm.vy * t;
            const double rx = ox - s.x;
            const double ry = oy - s.y;
            const double range = std::hypot(rx, ry);
            bool visible = range <= prm.max_range && range >= 0.5;
            double az_true = 0.0;
            if (visible) {
                az_true = wrap_pi(std::atan2(ry, rx) - s.heading - psi);
                visible = std::abs(az_true) <= prm.fov / 2.0;
            }
            if (!visible) {
                current_id[li] = -1;  // track drops, re-entry gets a fresh id
                continue;
            }
            if (current_id[li] < 0) current_id[li] = next_id++;
            const double rel_vx = lm.vx - ego_vx;
            const double rel_vy = lm.vy - ego_vy;
            const double range_rate = (rx * rel_vx + ry * rel_vy) / range;
            RadarPoint p;
            p.t = t;
            p.track_id = current_id[li];
            p.range = range + (prm.sigma_range > 0 ? prm.sigma_range * gauss(rng) : 0.0);
            p.azimuth = az_true + (prm.sigma_azimuth > 0 ? prm.sigma_azimuth * gauss(rng) : 0.0);
            p.doppler = -range_rate + (prm.sigma_doppler > 0 ? prm.sigma_doppler * gauss(rng) : 0.0);
            p.ego_speed = s.speed;
            p.ego_x = s.x;
            p.ego_y = s.y;
            out.push_back(p);
        }
        // stray returns: single-frame tracks with uniform kinematics
        int extra = static_cast<int>(std::floor(prm.outliers_per_frame));
        if (unit(rng) < prm.outliers_per_frame - extra) ++extra;
        for (int k = 0; k < extra; ++k) {
            RadarPoint p;
            p.t = t;
            p.track_id = next_id++;
            p.range = 1.0 + (prm.max_range - 1.0) * unit(rng);
            p.azimuth = (unit(rng) - 0.5) * prm.fov;
            p.doppler = (2.0 * unit(rng) - 1.0) * (2.0 * s.speed + 1.0);
            p.ego_speed = s.speed;
            p.ego_x = s.x;
            p.ego_y = s.y;
            out.push_back(p);
        }
    }
    return out;
}

double exact_hl_angle(const Intrinsics& K, double tilt, double pan, double roll) {
    const Vec3 r(-std::sin(pan) * std::cos(tilt), std::sin(tilt),
                 std::cos(pan) * std::cos(tilt));
    Mat3 R_vp = Mat3::Identity();
    const Vec3 z = Vec3::UnitZ();
    if ((r - z).norm() > 1e-12) {
        const auto aa = rotation_between(z, r);
        R_vp = rodrigues(aa.axis, aa.angle);
    }
    const Mat3 Rz = rodrigues(Vec3::UnitZ(), roll);
    const Vec3 n_cam = R_vp * Rz * Vec3(0, -1, 0);
    const Vec3 l = K.K().transpose().inverse() * n_cam;
    const double a = l.x(), b = l.y();
    const double theta = (b >= 0) ? std::atan2(-a, b) : std::atan2(a, -b);
    return wrap_half_pi(theta);
}

std::vector<VPObservation> gen_camera(const ScenarioSpec& spec, const TruthTrajectory& truth) {
    validate_spec(spec);
    auto rng = stream_rng(spec.seed, kCameraTag);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto& prm = spec.camera;
    const Intrinsics& K = prm.intrinsics;

    std::vector<VPObservation> out;
    const int n = sample_count(prm.rate, truth.duration());
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double t = i / prm.rate;
        const auto s = truth.state(t);
        // during turns the road direction swings the VP laterally and the
        // vehicle tilt leaks into the horizon angle
        const double pan = prm.mount.angles.pitch + prm.vp_turn_gain * s.yaw_rate;
        const double tilt = prm.mount.angles.yaw;
        const double roll = prm.mount.angles.roll + spec.turn_roll_gain * s.yaw_rate;
        const double r1 = -std::sin(pan) * std::cos(tilt);
        const double r2 = std::sin(tilt);
        const double r3 = std::cos(pan) * std::cos(tilt);
        if (r3 <= 1e-6) {
            throw Error(errc::invalid_input, "gen_camera: mount angles put the VP behind the camera");
        }
        VPObservation obs;
        obs.t = t;
        obs.vp_u = K.cx + (K.fx * r1 + K.skew * r2) / r3 +
                   (prm.sigma_vp_px > 0 ? prm.sigma_vp_px * gauss(rng) : 0.0);
        obs.vp_v = K.cy + K.fy * r2 / r3 +
                   (prm.sigma_vp_px > 0 ? prm.sigma_vp_px * gauss(rng) : 0.0);
        obs.hl_theta = (prm.exact_horizon ? exact_hl_angle(K, tilt, pan, roll) : roll) +
                       (prm.sigma_hl > 0 ? prm.sigma_hl * gauss(rng) : 0.0);
        out.push_back(obs);
    }
    return out;
}

namespace {

using nlohmann::ordered_json;

ordered_json mount_json(const MountSpec& m, bool with_height) {
    ordered_json j;
    j["yaw_rad"] = m.angles.yaw;
    j["pitch_rad"] = m.angles.pitch;
    j["roll_rad"] = m.angles.roll;
    j["yaw_deg"] = rad2deg(m.angles.yaw);
    j["pitch_deg"] = rad2deg(m.angles.pitch);
    j["roll_deg"] = rad2deg(m.angles.roll);
    if (with_height) j["height_m"] = m.height;
    return j;
}

}  // namespace

void write_scenario(const ScenarioSpec& spec, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw Error(errc::io_error, "cannot create output directory: " + out_dir);
    }
    const TruthTrajectory truth(spec.route);
    const fs::path root(out_dir);

    {
        std::ofstream f(root / "truth_states.csv");
        f << "t,x,y,heading,speed,yaw_rate\n";
        for (const auto& s : gen_trajectory(spec)) {
            f << io::format_double(s.t) << ',' << io::format_double(s.x) << ','
              << io::format_double(s.y) << ',' << io::format_double(s.heading) << ','
              << io::format_double(s.speed) << ',' << io::format_double(s.yaw_rate) << '\n';
        }
    }
    if (spec.gnss.enabled) {
        io::write_pose_csv((root / "gnss_poses.csv").string(), gen_gnss(spec, truth));
    }
    if (spec.lidar.enabled) {
        const auto lidar = gen_lidar(spec, truth);
        io::write_pose_csv((root / "lidar_poses.csv").string(), lidar.poses);
        io::write_lidar_dir((root / "lidar_frames").string(), lidar.frames);
    }
    if (spec.radar.enabled) {
        const auto landmarks = place_landmarks(spec, truth);
        io::write_radar_csv((root / "radar.csv").string(), gen_radar(spec, truth, landmarks));
    }
    if (spec.camera.enabled) {
        io::write_vp_csv((root / "camera_vp.csv").string(), gen_camera(spec, truth));
        io::write_intrinsics((root / "intrinsics.txt").string(), spec.camera.intrinsics);
    }

    ordered_json j;
    j["schema_version"] = 1;
    j["seed"] = spec.seed;
    j["duration_s"] = truth.duration();
    j["turn_roll_gain"] = spec.turn_roll_gain;
    j["mounts"] = ordered_json::object();
    if (spec.gnss.enabled) j["mounts"]["gnss"] = mount_json(spec.gnss.mount, false);
    if (spec.lidar.enabled) j["mounts"]["lidar"] = mount_json(spec.lidar.mount, true);
    if (spec.radar.enabled) j["mounts"]["radar"] = mount_json(spec.radar.mount, false);
    if (spec.camera.enabled) j["mounts"]["camera"] = mount_json(spec.camera.mount, false);
    std::ofstream tf(root / "truth.json");
    if (!tf) {
        throw Error(errc::io_error, "cannot write truth.json");
    }
    tf << j.dump(2) << '\n';
}

namespace {

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ' || c == '\t') {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<RoutePrimitive> parse_route(const std::string& value) {
    std::vector<RoutePrimitive> route;
    std::string part;
    std::vector<std::string> parts;
    for (char c : value + ";") {
        if (c == ';') {
            parts.push_back(part);
            part.clear();
        } else {
            part += c;
        }
    }
    for (const auto& p : parts) {
        const auto tok = split_ws(p);
        if (tok.empty()) continue;
        RoutePrimitive prim;
        if (tok[0] == "straight" && tok.size() == 3) {
            prim.kind = RoutePrimitive::Kind::straight;
            prim.duration = io::parse_double(tok[1], "route");
            prim.speed = io::parse_double(tok[2], "route");
        } else if (tok[0] == "arc" && tok.size() == 4) {
            prim.kind = RoutePrimitive::Kind::arc;
            prim.duration = io::parse_double(tok[1], "route");
            prim.speed = io::parse_double(tok[2], "route");
            prim.radius = io::parse_double(tok[3], "route");
        } else {
            throw Error(errc::bad_config,
                        "route: expected 'straight <dur> <speed>' or 'arc <dur> <speed> "
                        "<radius>', got '" +
                            p + "'");
        }
        route.push_back(prim);
    }
    if (route.empty()) {
        throw Error(errc::bad_config, "route: no primitives given");
    }
    return route;
}

}  // namespace

ScenarioSpec parse_scenario_file(const std::string& path) {
    ScenarioSpec spec;
    bool have_route = false;
    for (const auto& [key, value] : io::read_kv_file(path)) {
        const std::string ctx = path + " key " + key;
        auto d = [&]() { return io::parse_double(value, ctx); };
        auto l = [&]() { return io::parse_long(value, ctx); };
        auto b = [&]() { return io::parse_bool(value, ctx); };
        if (key == "seed") spec.seed = static_cast<uint64_t>(l());
        else if (key == "route") { spec.route = parse_route(value); have_route = true; }
        else if (key == "truth_rate") spec.truth_rate = d();
        else if (key == "turn_roll_gain") spec.turn_roll_gain = d();
        else if (key == "gnss.enabled") spec.gnss.enabled = b();
        else if (key == "gnss.rate") spec.gnss.rate = d();
        else if (key == "gnss.mount.yaw_deg") spec.gnss.mount.angles.yaw = deg2rad(d());
        else if (key == "gnss.mount.pitch_deg") spec.gnss.mount.angles.pitch = deg2rad(d());
        else if (key == "gnss.mount.roll_deg") spec.gnss.mount.angles.roll = deg2rad(d());
        else if (key == "gnss.noise.pos") spec.gnss.sigma_pos = d();
        else if (key == "gnss.noise.yaw_deg") spec.gnss.sigma_yaw = deg2rad(d());
        else if (key == "lidar.enabled") spec.lidar.enabled = b();
        else if (key == "lidar.rate") spec.lidar.rate = d();
        else if (key == "lidar.mount.yaw_deg") spec.lidar.mount.angles.yaw = deg2rad(d());
        else if (key == "lidar.mount.pitch_deg") spec.lidar.mount.angles.pitch = deg2rad(d());
        else if (key == "lidar.mount.roll_deg") spec.lidar.mount.angles.roll = deg2rad(d());
        else if (key == "lidar.mount.height") spec.lidar.mount.height = d();
        else if (key == "lidar.points_per_frame") spec.lidar.points_per_frame = static_cast<int>(l());
        else if (key == "lidar.ground_radius") spec.lidar.ground_radius = d();
        else if (key == "lidar.clutter_fraction") spec.lidar.clutter_fraction = d();
        else if (key == "lidar.noise.range") spec.lidar.sigma_range = d();
        else if (key == "lidar.noise.pose_yaw_deg") spec.lidar.sigma_pose_yaw = deg2rad(d());
        else if (key == "radar.enabled") spec.radar.enabled = b();
        else if (key == "radar.rate") spec.radar.rate = d();
        else if (key == "radar.mount.yaw_deg") spec.radar.mount.angles.yaw = deg2rad(d());
        else if (key == "radar.fov_deg") spec.radar.fov = deg2rad(d());
        else if (key == "radar.max_range") spec.radar.max_range = d();
        else if (key == "radar.landmark_count") spec.radar.landmark_count = static_cast<int>(l());
        else if (key == "radar.corridor") spec.radar.corridor = d();
        else if (key == "radar.corridor_min") spec.radar.corridor_min = d();
        else if (key == "radar.mover_count") spec.radar.mover_count = static_cast<int>(l());
        else if (key == "radar.outliers_per_frame") spec.radar.outliers_per_frame = d();
        else if (key == "radar.noise.azimuth_deg") spec.radar.sigma_azimuth = deg2rad(d());
        else if (key == "radar.noise.range") spec.radar.sigma_range = d();
        else if (key == "radar.noise.doppler") spec.radar.sigma_doppler = d();
        else if (key == "camera.enabled") spec.camera.enabled = b();
        else if (key == "camera.rate") spec.camera.rate = d();
        else if (key == "camera.mount.yaw_deg") spec.camera.mount.angles.yaw = deg2rad(d());
        else if (key == "camera.mount.pitch_deg") spec.camera.mount.angles.pitch = deg2rad(d());
        else if (key == "camera.mount.roll_deg") spec.camera.mount.angles.roll = deg2rad(d());
        else if (key == "camera.fx") spec.camera.intrinsics.fx = d();
        else if (key == "camera.fy") spec.camera.intrinsics.fy = d();
        else if (key == "camera.cx") spec.camera.intrinsics.cx = d();
        else if (key == "camera.cy") spec.camera.intrinsics.cy = d();
        else if (key == "camera.skew") spec.camera.intrinsics.skew = d();
        else if (key == "camera.noise.vp_px") spec.camera.sigma_vp_px = d();
        else if (key == "camera.noise.hl_deg") spec.camera.sigma_hl = deg2rad(d());
        else if (key == "camera.vp_turn_gain") spec.camera.vp_turn_gain = d();
        else if (key == "camera.exact_horizon") spec.camera.exact_horizon = b();
        else {
            throw Error(errc::bad_config, "unknown scenario key '" + key + "'");
        }
    }
    if (!have_route) {
        throw Error(errc::bad_config, path + ": scenario needs a route");
    }
    return spec;
}

}  // namespace carcal::sim
