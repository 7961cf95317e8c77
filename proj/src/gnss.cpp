#include "carcal/gnss.hpp"

namespace carcal {

GnssEstimate gnss_yaw_offset(std::span<const PoseSample> poses, const GnssCalibConfig& cfg) {
    const YawOffsetResult r =
        yaw_offset_from_poses(poses, cfg.gates, cfg.spline_degree, cfg.spline_ctrl_spacing);
    return {r.offset, r.used_count, r.dispersion};
}

}  // namespace carcal
