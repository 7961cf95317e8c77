#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "carcal/camera.hpp"
#include "carcal/lidar.hpp"
#include "carcal/radar.hpp"
#include "carcal/trajectory.hpp"

namespace carcal::io {

// CSV contracts (exact headers):
//   poses:  t,x,y,z,qw,qx,qy,qz
//   vp:     t,vp_u,vp_v,hl_theta
//   lines:  t,u1,v1,u2,v2            (multiple rows per t)
//   radar:  t,track_id,range,azimuth,doppler,ego_speed,ego_x,ego_y
//   lidar:  directory of <frame_index>.csv (header x,y,z) plus index.csv
//           (header frame_index,t)
// Values are written with 17 significant digits so parse(write(x)) == x.

std::vector<PoseRecord> read_pose_csv(const std::string& path);
void write_pose_csv(const std::string& path, std::span<const PoseRecord> poses);

std::vector<VPObservation> read_vp_csv(const std::string& path);
void write_vp_csv(const std::string& path, std::span<const VPObservation> rows);

std::vector<LineFrame> read_lines_csv(const std::string& path);
void write_lines_csv(const std::string& path, std::span<const LineFrame> frames);

Intrinsics read_intrinsics(const std::string& path);
void write_intrinsics(const std::string& path, const Intrinsics& K);

std::vector<RadarPoint> read_radar_csv(const std::string& path);
void write_radar_csv(const std::string& path, std::span<const RadarPoint> rows);

std::vector<PointCloudFrame> read_lidar_dir(const std::string& dir);
void write_lidar_dir(const std::string& dir, std::span<const PointCloudFrame> frames);

/// `key = value` file; '#' starts a comment, blank lines ignored. Returned in
/// file order.
std::vector<std::pair<std::string, std::string>> read_kv_file(const std::string& path);

double parse_double(const std::string& s, const std::string& context);
long parse_long(const std::string& s, const std::string& context);
bool parse_bool(const std::string& s, const std::string& context);

/// Shortest text that round-trips the double exactly.
std::string format_double(double v);

}  // namespace carcal::io
