#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "carcal/camera.hpp"
#include "carcal/gnss.hpp"
#include "carcal/lidar.hpp"
#include "carcal/radar.hpp"

namespace carcal {

enum class Method { camera, lidar, gnss, radar_velocity, radar_position };

Method method_from_string(const std::string& name);
std::string method_name(Method m);

/// Resolved parameter bundle for every calibrator, shared by the CLI and the
/// consistency protocol.
struct MethodParams {
    CameraConfig camera;
    LidarCalibConfig lidar;
    GnssCalibConfig gnss;
    RadarVelocityConfig radar_velocity;
    RadarPositionConfig radar_position;
    StraightSegmentParams straights;
    uint64_t seed = 1;
};

/// Everything a consistency run may need; only the fields used by the chosen
/// method have to be filled.
struct ConsistencyInput {
    Method method = Method::gnss;
    std::vector<PoseRecord> poses;              // gnss / lidar / camera straightness
    std::vector<PointCloudFrame> cloud_frames;  // lidar
    std::vector<RadarPoint> radar;              // radar methods
    std::vector<VPObservation> vp;              // camera
    std::optional<Intrinsics> intrinsics;       // camera
};

struct SegmentEstimate {
    int index = 0;
    double t_start = 0.0;
    double t_end = 0.0;
    bool straight = false;
    bool valid = false;
    std::string error_code;  // set when valid == false
    // estimate values keyed by name ("roll","pitch","yaw","z",...)
    std::vector<std::pair<std::string, double>> values;
};

struct ConsistencyReport {
    Method method = Method::gnss;
    double segment_length = 60.0;
    int segment_count = 0;
    int valid_count = 0;
    int straight_count = 0;
    std::vector<SegmentEstimate> segments;
    // dispersion across valid segments; angles use circular std, "z" linear
    std::vector<std::pair<std::string, double>> std_all;
    std::vector<std::pair<std::string, double>> std_straight;  // empty if < 2 straight segments
};

/// Splits the input by time into complete segments, runs the chosen
/// calibrator on each, and reports per-angle dispersion over all segments and
/// over straight-only segments (segments fully inside a straight span of the
/// ego path). Needs at least two complete segments.
ConsistencyReport run_consistency(const ConsistencyInput& input, const MethodParams& params,
                                  double segment_length);

}  // namespace carcal
