#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "carcal/geom.hpp"

namespace carcal {

// Pixel frame: u right, v down. Camera axes: x right, y down, z forward.
// The vanishing-point angles are taken literally in this frame; pitch moves
// the VP along u, yaw along v, and the horizon angle is the roll.

struct Intrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    double skew = 0.0;

    Mat3 K() const;
    Mat3 K_inv() const;
};

struct VPObservation {
    double t = 0.0;
    double vp_u = 0.0;
    double vp_v = 0.0;
    double hl_theta = 0.0;  // horizon line angle, rad
};

struct LineSeg2D {
    double u1, v1, u2, v2;

    /// Homogeneous line through the endpoints (cross product of the
    /// homogeneous points). Endpoints must be >= 1 px apart.
    Vec3 hom_line() const;
};

/// One set of detected line segments sharing a frame timestamp.
struct LineFrame {
    double t = 0.0;
    std::vector<LineSeg2D> lines;
};

struct CameraEstimate {
    double roll, pitch, yaw;  // rad
    double window_std;        // max per-angle circular std inside the window
    int frame_count;          // frames consumed when this estimate was emitted
};

/// Normalized incidence |l.p| / (|l||p|) between a homogeneous line and a
/// homogeneous point; invariant to rescaling either argument.
double line_vp_distance(const Vec3& line, const Vec3& vp_h);

/// True iff the distance is strictly below d_th (boundary counts as not
/// passing).
bool classify_line(const LineSeg2D& line, const Vec3& vp_h, double d_th);

struct VPEstimate {
    double u, v;
    int inlier_count;
};

/// RANSAC over line pairs: hypothesis vp = l1 x l2, consensus by
/// line_vp_distance < d_th, best hypothesis refined by least-squares
/// intersection of its inliers. Deterministic for a fixed seed.
VPEstimate estimate_vp_from_lines(std::span<const LineSeg2D> lines, double d_th, int iterations,
                                  uint64_t rng_seed);

struct YawPitch {
    double yaw, pitch;
};

/// Back-projects the VP through K and reads the two angles off the
/// normalized direction r: yaw = arcsin(r2), pitch = -arctan(r1/r3).
YawPitch vp_to_yaw_pitch(double vp_u, double vp_v, const Intrinsics& K);

/// Roll is the horizon angle directly, wrapped to (-pi/2, pi/2].
double roll_from_hl(double hl_theta);

struct AngleTriple {
    double roll, pitch, yaw;
};

/// Sliding-window dispersion gate. Feed per-frame angle triples; an estimate
/// is emitted only when the window is full and every angle sequence has
/// circular std at or below the threshold. One instance per stream.
class StabilityGate {
public:
    StabilityGate(int window_n = 100, double std_threshold = 0.005);

    std::optional<CameraEstimate> push(const AngleTriple& frame);

    int window_n() const { return window_n_; }

private:
    int window_n_;
    double std_threshold_;
    long frames_seen_ = 0;
    std::deque<AngleTriple> window_;
};

struct CameraConfig {
    int window_n = 100;
    double std_threshold = 0.005;   // rad
    double d_th = 1e-3;             // Eq-1 metric threshold for line consensus
    int vp_ransac_iterations = 200;
    uint64_t seed = 1;
};

struct CameraRunResult {
    std::vector<CameraEstimate> emissions;
    int frames_in = 0;        // observations consumed
    int frames_skipped = 0;   // frames without a usable VP
    bool has_aggregate = false;
    AngleTriple aggregate{0, 0, 0};   // circular mean over emissions
    AngleTriple aggregate_std{0, 0, 0};
    bool roll_available = true;  // false in line-only mode (no horizon input)
};

/// Full VP/HL pipeline: per-frame angles -> stability gate -> emissions plus
/// a final aggregate.
CameraRunResult calibrate_camera(std::span<const VPObservation> observations, const Intrinsics& K,
                                 const CameraConfig& cfg);

/// Line-segment pipeline: per-frame RANSAC vanishing point, then the same
/// gate. Lines carry no horizon information, so roll is reported as zero and
/// flagged unavailable.
CameraRunResult calibrate_camera_lines(std::span<const LineFrame> frames, const Intrinsics& K,
                                       const CameraConfig& cfg);

}  // namespace carcal
