// Batch front end: run one calibrator, the simulator, or the segment
// consistency protocol, and write a JSON report.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "carcal/consistency.hpp"
#include "carcal/io.hpp"
#include "carcal/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace carcal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitUsage = 2;

struct CommonArgs {
    std::string config_path;
    std::string output_path;
    std::optional<uint64_t> seed;
    std::vector<std::string> overrides;  // key=value
    bool trace = false;
    std::string trace_path;
};

struct InputArgs {
    std::string poses;
    std::string clouds;
    std::string vp;
    std::string lines;
    std::string intrinsics;
    std::string radar;
};

[[noreturn]] void usage_error(const std::string& msg) {
    std::cerr << "error: " << msg << "\n";
    std::exit(kExitUsage);
}

void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) usage_error(what + " input is required");
    if (!fs::exists(path)) usage_error(what + " not found: " + path);
}

double angle_from_kv(const std::string& key, const std::string& value, bool degrees) {
    const double v = io::parse_double(value, "config key " + key);
    return degrees ? deg2rad(v) : v;
}

// Applies one key=value onto the parameter bundle. Shared by --config files
// and --set flags so both spell parameters identically.
void apply_param(MethodParams& p, const std::string& key, const std::string& value) {
    const std::string ctx = "config key " + key;
    auto d = [&]() { return io::parse_double(value, ctx); };
    auto l = [&]() { return static_cast<int>(io::parse_long(value, ctx)); };
    if (key == "seed") p.seed = static_cast<uint64_t>(io::parse_long(value, ctx));
    else if (key == "camera.window_n") p.camera.window_n = l();
    else if (key == "camera.std_threshold") p.camera.std_threshold = d();
    else if (key == "camera.d_th") p.camera.d_th = d();
    else if (key == "camera.ransac_iterations") p.camera.vp_ransac_iterations = l();
    else if (key == "lidar.r_min") p.lidar.r_min = d();
    else if (key == "lidar.r_max") p.lidar.r_max = d();
    else if (key == "lidar.ransac_runs") p.lidar.ransac_runs = l();
    else if (key == "lidar.ransac_iterations") p.lidar.ransac_iterations = l();
    else if (key == "lidar.inlier_tol") p.lidar.inlier_tol = d();
    else if (key == "lidar.refine_angle_range_deg") p.lidar.refine_angle_range = angle_from_kv(key, value, true);
    else if (key == "lidar.refine_d_range") p.lidar.refine_d_range = d();
    else if (key == "lidar.refine_samples") p.lidar.refine_samples = l();
    else if (key == "lidar.refine_rounds") p.lidar.refine_rounds = l();
    else if (key == "lidar.frame_stride") p.lidar.frame_stride = l();
    else if (key == "lidar.yaw_rate_max") p.lidar.yaw_rate_max = d();
    else if (key == "lidar.min_ground_points") p.lidar.min_ground_points = l();
    else if (key == "lidar.v_min_sq") p.lidar.gates.v_min_sq = d();
    else if (key == "lidar.c_max") p.lidar.gates.c_max = d();
    else if (key == "lidar.spline_ctrl_spacing") p.lidar.spline_ctrl_spacing = d();
    else if (key == "gnss.v_min_sq") p.gnss.gates.v_min_sq = d();
    else if (key == "gnss.c_max") p.gnss.gates.c_max = d();
    else if (key == "gnss.spline_ctrl_spacing") p.gnss.spline_ctrl_spacing = d();
    else if (key == "radar.search_half_range_deg") p.radar_velocity.search_half_range = angle_from_kv(key, value, true);
    else if (key == "radar.step_deg") p.radar_velocity.search_step = angle_from_kv(key, value, true);
    else if (key == "radar.residual_tol") p.radar_velocity.residual_tol = d();
    else if (key == "radar.iterations") p.radar_velocity.iterations = l();
    else if (key == "radar.burn_in_fraction") p.radar_velocity.burn_in_fraction = d();
    else if (key == "radar.update_gain") p.radar_velocity.update_gain = d();
    else if (key == "radar.max_step_per_iter") p.radar_velocity.max_step_per_iter = d();
    else if (key == "radar.pair_angle_tol") p.radar_position.pair_angle_tol = d();
    else if (key == "radar.min_track_frames") p.radar_position.min_track_frames = l();
    else if (key == "radar.d_min") p.radar_position.d_min = d();
    else if (key == "straight.min_length") p.straights.min_length_m = d();
    else if (key == "straight.max_heading_dev_deg") p.straights.max_heading_dev = angle_from_kv(key, value, true);
    else if (key == "straight.simplify_tol") p.straights.simplify_tol_m = d();
    else throw Error(errc::bad_config, "unknown parameter '" + key + "'");
}

MethodParams resolve_params(const CommonArgs& args) {
    MethodParams p;
    try {
        if (!args.config_path.empty()) {
            if (!fs::exists(args.config_path)) {
                usage_error("config not found: " + args.config_path);
            }
            for (const auto& [k, v] : io::read_kv_file(args.config_path)) apply_param(p, k, v);
        }
        for (const auto& kv : args.overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) usage_error("--set expects key=value, got '" + kv + "'");
            apply_param(p, kv.substr(0, eq), kv.substr(eq + 1));
        }
    } catch (const Error& e) {
        usage_error(e.what());  // malformed parameters are configuration problems
    }
    if (args.seed) p.seed = *args.seed;
    p.camera.seed = p.seed;
    p.lidar.seed = p.seed;
    // straight-segment params feed the radar position method too
    p.radar_position.segments = p.straights;
    return p;
}

ordered_json params_json(const MethodParams& p) {
    ordered_json j;
    j["seed"] = p.seed;
    j["camera"] = {{"window_n", p.camera.window_n},
                   {"std_threshold", p.camera.std_threshold},
                   {"d_th", p.camera.d_th},
                   {"ransac_iterations", p.camera.vp_ransac_iterations}};
    j["lidar"] = {{"r_min", p.lidar.r_min},
                  {"r_max", p.lidar.r_max},
                  {"ransac_runs", p.lidar.ransac_runs},
                  {"ransac_iterations", p.lidar.ransac_iterations},
                  {"inlier_tol", p.lidar.inlier_tol},
                  {"refine_angle_range_rad", p.lidar.refine_angle_range},
                  {"refine_d_range", p.lidar.refine_d_range},
                  {"refine_samples", p.lidar.refine_samples},
                  {"refine_rounds", p.lidar.refine_rounds},
                  {"frame_stride", p.lidar.frame_stride},
                  {"yaw_rate_max", p.lidar.yaw_rate_max},
                  {"min_ground_points", p.lidar.min_ground_points},
                  {"v_min_sq", p.lidar.gates.v_min_sq},
                  {"c_max", p.lidar.gates.c_max},
                  {"spline_ctrl_spacing", p.lidar.spline_ctrl_spacing}};
    j["gnss"] = {{"v_min_sq", p.gnss.gates.v_min_sq},
                 {"c_max", p.gnss.gates.c_max},
                 {"spline_ctrl_spacing", p.gnss.spline_ctrl_spacing}};
    j["radar_velocity"] = {{"search_half_range_rad", p.radar_velocity.search_half_range},
                           {"search_step_rad", p.radar_velocity.search_step},
                           {"residual_tol", p.radar_velocity.residual_tol},
                           {"iterations", p.radar_velocity.iterations},
                           {"burn_in_fraction", p.radar_velocity.burn_in_fraction},
                           {"update_gain", p.radar_velocity.update_gain},
                           {"max_step_per_iter", p.radar_velocity.max_step_per_iter}};
    j["radar_position"] = {{"pair_angle_tol", p.radar_position.pair_angle_tol},
                           {"min_track_frames", p.radar_position.min_track_frames},
                           {"d_min", p.radar_position.d_min}};
    j["straight_segments"] = {{"min_length_m", p.straights.min_length_m},
                              {"max_heading_dev_rad", p.straights.max_heading_dev},
                              {"simplify_tol_m", p.straights.simplify_tol_m}};
    return j;
}

void add_angle(ordered_json& j, const std::string& name, double rad) {
    j[name + "_rad"] = rad;
    j[name + "_deg"] = rad2deg(rad);
}

void write_report(const std::string& path, const ordered_json& j) {
    std::ofstream f(path);
    if (!f) usage_error("cannot write report: " + path);
    f << j.dump(2) << '\n';
}

ordered_json report_shell(const std::string& method, const MethodParams& params,
                          const ordered_json& inputs) {
    ordered_json j;
    j["schema_version"] = 1;
    j["method"] = method;
    j["inputs"] = inputs;
    j["params"] = params_json(params);
    j["error"] = nullptr;
    return j;
}

int finish_with_error(ordered_json& report, const std::string& path, const Error& e) {
    report["error"] = {{"code", e.code()}, {"message", e.what()}};
    write_report(path, report);
    std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
    return kExitDataError;
}

int run_camera(const CommonArgs& common, const InputArgs& in) {
    require_file(in.intrinsics, "--intrinsics");
    const bool use_vp = !in.vp.empty();
    if (!use_vp && in.lines.empty()) usage_error("camera needs --vp or --lines");
    if (use_vp) require_file(in.vp, "--vp");
    if (!use_vp) require_file(in.lines, "--lines");

    const MethodParams params = resolve_params(common);
    ordered_json inputs;
    inputs["intrinsics"] = in.intrinsics;
    if (use_vp) inputs["vp"] = in.vp;
    else inputs["lines"] = in.lines;
    ordered_json report = report_shell("camera", params, inputs);
    try {
        const Intrinsics K = io::read_intrinsics(in.intrinsics);
        CameraRunResult run;
        if (use_vp) {
            const auto rows = io::read_vp_csv(in.vp);
            run = calibrate_camera(rows, K, params.camera);
        } else {
            const auto frames = io::read_lines_csv(in.lines);
            run = calibrate_camera_lines(frames, K, params.camera);
        }
        if (!run.has_aggregate) {
            throw Error(errc::no_valid_data, "stability gate never opened");
        }
        ordered_json emissions = ordered_json::array();
        for (const auto& e : run.emissions) {
            ordered_json je;
            add_angle(je, "roll", e.roll);
            add_angle(je, "pitch", e.pitch);
            add_angle(je, "yaw", e.yaw);
            je["window_std_rad"] = e.window_std;
            je["frame_count"] = e.frame_count;
            emissions.push_back(je);
        }
        ordered_json result;
        add_angle(result, "roll", run.aggregate.roll);
        add_angle(result, "pitch", run.aggregate.pitch);
        add_angle(result, "yaw", run.aggregate.yaw);
        result["roll_available"] = run.roll_available;
        result["emission_count"] = run.emissions.size();
        result["frames_in"] = run.frames_in;
        result["frames_skipped"] = run.frames_skipped;
        report["result"] = result;
        report["emissions"] = emissions;
        write_report(common.output_path, report);
        return kExitOk;
    } catch (const Error& e) {
        return finish_with_error(report, common.output_path, e);
    }
}

int run_lidar(const CommonArgs& common, const InputArgs& in) {
    require_file(in.poses, "--poses");
    if (in.clouds.empty()) usage_error("--clouds directory is required");
    if (!fs::exists(in.clouds)) usage_error("--clouds not found: " + in.clouds);

    const MethodParams params = resolve_params(common);
    ordered_json report = report_shell(
        "lidar", params, ordered_json{{"poses", in.poses}, {"clouds", in.clouds}});
    try {
        const auto poses = io::read_pose_csv(in.poses);
        const auto frames = io::read_lidar_dir(in.clouds);
        const auto est = calibrate_lidar(frames, poses, params.lidar);
        ordered_json result;
        add_angle(result, "roll", est.roll);
        add_angle(result, "pitch", est.pitch);
        add_angle(result, "yaw", est.yaw);
        result["z_m"] = est.z;
        add_angle(result, "roll_std", est.roll_std);
        add_angle(result, "pitch_std", est.pitch_std);
        add_angle(result, "yaw_std", est.yaw_std);
        result["z_std_m"] = est.z_std;
        result["frames_used"] = est.frames_used;
        result["yaw_used_count"] = est.yaw_used_count;
        report["result"] = result;
        write_report(common.output_path, report);
        return kExitOk;
    } catch (const Error& e) {
        return finish_with_error(report, common.output_path, e);
    }
}

int run_gnss(const CommonArgs& common, const InputArgs& in) {
    require_file(in.poses, "--poses");
    const MethodParams params = resolve_params(common);
    ordered_json report = report_shell("gnss", params, ordered_json{{"poses", in.poses}});
    try {
        const auto poses = io::read_pose_csv(in.poses);
        const auto est = gnss_yaw_offset(to_samples(poses), params.gnss);
        ordered_json result;
        add_angle(result, "yaw_offset", est.yaw_offset);
        result["used_count"] = est.used_count;
        add_angle(result, "dispersion", est.dispersion);
        report["result"] = result;
        write_report(common.output_path, report);
        return kExitOk;
    } catch (const Error& e) {
        return finish_with_error(report, common.output_path, e);
    }
}

int run_radar(const CommonArgs& common, const InputArgs& in, bool velocity) {
    require_file(in.radar, "--radar");
    const MethodParams params = resolve_params(common);
    const std::string method = velocity ? "radar-velocity" : "radar-position";
    ordered_json report = report_shell(method, params, ordered_json{{"radar", in.radar}});
    try {
        const auto points = io::read_radar_csv(in.radar);
        ordered_json result;
        if (velocity) {
            std::vector<double> trace;
            const auto est = calibrate_radar_velocity(points, params.radar_velocity,
                                                      common.trace ? &trace : nullptr);
            add_angle(result, "yaw", est.yaw);
            result["method"] = "velocity";
            result["iterations"] = est.iterations;
            result["final_static_fraction"] = est.confidence_sum;
            if (common.trace) {
                std::ofstream tf(common.trace_path);
                if (!tf) throw Error(errc::io_error, "cannot write trace: " + common.trace_path);
                tf << "iteration,psi\n";
                for (size_t i = 0; i < trace.size(); ++i) {
                    tf << i << ',' << io::format_double(trace[i]) << '\n';
                }
                result["trace"] = common.trace_path;
            }
        } else {
            const auto est = calibrate_radar_position(points, params.radar_position);
            add_angle(result, "yaw", est.yaw);
            result["method"] = "position";
            result["objects_used"] = est.objects_used;
            result["confidence_sum"] = est.confidence_sum;
        }
        report["result"] = result;
        write_report(common.output_path, report);
        return kExitOk;
    } catch (const Error& e) {
        return finish_with_error(report, common.output_path, e);
    }
}

int run_simulate(const CommonArgs& common, const std::string& scenario_path) {
    require_file(scenario_path, "--scenario");
    if (common.output_path.empty()) usage_error("--output directory is required");
    try {
        sim::ScenarioSpec spec = sim::parse_scenario_file(scenario_path);
        if (common.seed) spec.seed = *common.seed;
        sim::write_scenario(spec, common.output_path);
        return kExitOk;
    } catch (const Error& e) {
        if (std::string(e.code()) == errc::bad_config || std::string(e.code()) == errc::io_error) {
            usage_error(std::string(e.what()));
        }
        std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
        return kExitDataError;
    }
}

int run_consistency_cmd(const CommonArgs& common, const InputArgs& in,
                        const std::string& method_str, double segment_length) {
    Method method;
    try {
        method = method_from_string(method_str);
    } catch (const Error& e) {
        usage_error(e.what());
    }
    const MethodParams params = resolve_params(common);
    ordered_json inputs;
    ConsistencyInput input;
    input.method = method;
    try {
        switch (method) {
            case Method::gnss:
                require_file(in.poses, "--poses");
                inputs["poses"] = in.poses;
                input.poses = io::read_pose_csv(in.poses);
                break;
            case Method::lidar:
                require_file(in.poses, "--poses");
                if (in.clouds.empty() || !fs::exists(in.clouds)) {
                    usage_error("--clouds directory is required");
                }
                inputs["poses"] = in.poses;
                inputs["clouds"] = in.clouds;
                input.poses = io::read_pose_csv(in.poses);
                input.cloud_frames = io::read_lidar_dir(in.clouds);
                break;
            case Method::radar_velocity:
            case Method::radar_position:
                require_file(in.radar, "--radar");
                inputs["radar"] = in.radar;
                input.radar = io::read_radar_csv(in.radar);
                break;
            case Method::camera:
                require_file(in.vp, "--vp");
                require_file(in.intrinsics, "--intrinsics");
                inputs["vp"] = in.vp;
                inputs["intrinsics"] = in.intrinsics;
                input.vp = io::read_vp_csv(in.vp);
                input.intrinsics = io::read_intrinsics(in.intrinsics);
                if (!in.poses.empty()) {
                    require_file(in.poses, "--poses");
                    inputs["poses"] = in.poses;
                    input.poses = io::read_pose_csv(in.poses);
                }
                break;
        }
    } catch (const Error& e) {
        usage_error(e.what());  // unreadable inputs are configuration problems
    }

    ordered_json report = report_shell("consistency", params, inputs);
    report["consistency_method"] = method_str;
    report["segment_length_s"] = segment_length;
    try {
        const ConsistencyReport rep = run_consistency(input, params, segment_length);
        ordered_json segments = ordered_json::array();
        for (const auto& s : rep.segments) {
            ordered_json js;
            js["index"] = s.index;
            js["t_start"] = s.t_start;
            js["t_end"] = s.t_end;
            js["straight"] = s.straight;
            js["valid"] = s.valid;
            if (!s.valid) {
                js["error_code"] = s.error_code;
            } else {
                for (const auto& [k, v] : s.values) {
                    if (k == "z") js["z_m"] = v;
                    else add_angle(js, k, v);
                }
            }
            segments.push_back(js);
        }
        ordered_json result;
        result["segment_count"] = rep.segment_count;
        result["valid_count"] = rep.valid_count;
        result["straight_count"] = rep.straight_count;
        ordered_json std_all, std_straight;
        for (const auto& [k, v] : rep.std_all) {
            if (k == "z") std_all["z_m"] = v;
            else add_angle(std_all, k + "_std", v);
        }
        for (const auto& [k, v] : rep.std_straight) {
            if (k == "z") std_straight["z_m"] = v;
            else add_angle(std_straight, k + "_std", v);
        }
        result["std_all"] = std_all;
        result["std_straight"] = std_straight;
        report["result"] = result;
        report["segments"] = segments;
        write_report(common.output_path, report);
        return kExitOk;
    } catch (const Error& e) {
        return finish_with_error(report, common.output_path, e);
    }
}

void add_common(CLI::App* sub, CommonArgs& common, bool with_trace = false) {
    sub->add_option("--config", common.config_path, "key-value parameter file");
    sub->add_option("--output", common.output_path, "report path")->required();
    sub->add_option("--seed", common.seed, "seed override");
    sub->add_option("--set", common.overrides, "parameter override key=value (repeatable)");
    if (with_trace) {
        sub->add_option("--trace", common.trace_path, "write per-iteration convergence CSV")
            ->each([&common](const std::string&) { common.trace = true; });
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sensor-to-vehicle rotation calibration toolbox"};
    app.require_subcommand(1);

    CommonArgs common;
    InputArgs in;
    std::string scenario_path;
    std::string method_str;
    double segment_length = 60.0;

    auto* cam = app.add_subcommand("camera", "camera-to-car angles from VP/HL observations");
    add_common(cam, common);
    cam->add_option("--vp", in.vp, "VP/HL CSV (t,vp_u,vp_v,hl_theta)");
    cam->add_option("--lines", in.lines, "line-segment CSV (t,u1,v1,u2,v2)");
    cam->add_option("--intrinsics", in.intrinsics, "intrinsics key-value file")->required();

    auto* lid = app.add_subcommand("lidar", "LiDAR roll/pitch/height from ground, yaw from poses");
    add_common(lid, common);
    lid->add_option("--poses", in.poses, "pose CSV")->required();
    lid->add_option("--clouds", in.clouds, "point cloud directory")->required();

    auto* gns = app.add_subcommand("gnss", "GNSS/INS heading offset from poses");
    add_common(gns, common);
    gns->add_option("--poses", in.poses, "pose CSV")->required();

    auto* rv = app.add_subcommand("radar-velocity", "radar yaw from the Doppler profile");
    add_common(rv, common, true);
    rv->add_option("--radar", in.radar, "radar CSV")->required();

    auto* rp = app.add_subcommand("radar-position", "radar yaw from tracked static objects");
    add_common(rp, common);
    rp->add_option("--radar", in.radar, "radar CSV")->required();

    auto* simc = app.add_subcommand("simulate", "generate a synthetic scenario dataset");
    simc->add_option("--scenario", scenario_path, "scenario key-value file")->required();
    simc->add_option("--output", common.output_path, "output directory")->required();
    simc->add_option("--seed", common.seed, "seed override");

    auto* cons = app.add_subcommand("consistency", "per-segment estimates and dispersion");
    add_common(cons, common);
    cons->add_option("--method", method_str, "camera|lidar|gnss|radar-velocity|radar-position")
        ->required();
    cons->add_option("--segment-length", segment_length, "segment length in seconds");
    cons->add_option("--poses", in.poses, "pose CSV");
    cons->add_option("--clouds", in.clouds, "point cloud directory");
    cons->add_option("--vp", in.vp, "VP/HL CSV");
    cons->add_option("--intrinsics", in.intrinsics, "intrinsics file");
    cons->add_option("--radar", in.radar, "radar CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (app.got_subcommand(cam)) return run_camera(common, in);
        if (app.got_subcommand(lid)) return run_lidar(common, in);
        if (app.got_subcommand(gns)) return run_gnss(common, in);
        if (app.got_subcommand(rv)) return run_radar(common, in, true);
        if (app.got_subcommand(rp)) return run_radar(common, in, false);
        if (app.got_subcommand(simc)) return run_simulate(common, scenario_path);
        if (app.got_subcommand(cons)) {
            return run_consistency_cmd(common, in, method_str, segment_length);
        }
    } catch (const Error& e) {
        std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
        return kExitDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    }
    return kExitUsage;
}
