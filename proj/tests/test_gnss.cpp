#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "carcal/gnss.hpp"
#include "carcal/lidar.hpp"

using namespace carcal;

namespace {

// two straights joined by a tight roundabout, 5 m/s in the loop
std::vector<PoseSample> roundabout_route(double yaw_offset, double heading_noise, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, heading_noise);
    std::vector<PoseSample> out;
    const double dt = 0.1;
    double x = 0.0, y = 0.0, h = 0.0;
    const double t_loop_start = 60.0, t_loop_end = 72.566;  // 2*pi*10 m at 5 m/s
    for (double t = 0.0; t <= 132.0; t += dt) {
        double v, rate;
        if (t < t_loop_start) {
            v = 10.0;
            rate = 0.0;
        } else if (t < t_loop_end) {
            v = 5.0;
            rate = 0.5;  // radius 10
        } else {
            v = 10.0;
            rate = 0.0;
        }
        out.push_back({t, x, y, 0.0, wrap_pi(h + yaw_offset + (heading_noise > 0 ? noise(rng) : 0.0))});
        h += rate * dt;
        x += v * dt * std::cos(h);
        y += v * dt * std::sin(h);
    }
    return out;
}

}  // namespace

TEST_CASE("gnss_yaw_offset") {
    SUBCASE("zero mounting offset is exact") {
        std::vector<PoseSample> samples;
        for (int i = 0; i <= 600; ++i) {
            const double t = 0.1 * i;
            samples.push_back({t, 10.0 * t, 0.0, 0.0, 0.0});
        }
        const auto est = gnss_yaw_offset(samples);
        CHECK(std::abs(est.yaw_offset) < 1e-9);
        CHECK(est.used_count == 601);
    }
    SUBCASE("curved route with noise, roundabout gated out") {
        const double offset = deg2rad(2.0);
        const auto samples = roundabout_route(offset, deg2rad(0.1), 11);
        const auto est = gnss_yaw_offset(samples);
        CHECK(std::abs(est.yaw_offset - offset) < deg2rad(0.05));
        // no timestamp in the valid set falls inside the loop window
        const auto sp = fit_spline(samples, 3);
        std::vector<double> ts;
        for (const auto& s : samples) ts.push_back(s.t);
        const auto kept = valid_set(sp, ts, GnssCalibConfig{}.gates);
        for (double t : kept) {
            CHECK(!(t > 61.0 && t < 71.5));
        }
    }
    SUBCASE("matches lidar_yaw_offset on the same stream") {
        const auto samples = roundabout_route(deg2rad(1.2), deg2rad(0.05), 7);
        const TrajectoryGates gates{4.0, 0.01};
        const auto a = gnss_yaw_offset(samples, {gates, 3});
        const auto b = lidar_yaw_offset(samples, gates);
        CHECK(a.yaw_offset == b.offset);
        CHECK(a.used_count == b.used_count);
        CHECK(a.dispersion == b.dispersion);
    }
    SUBCASE("invariant under a rigid world rotation") {
        // straight drive: the valid set is identical on both sides, so the
        // means must agree to rounding
        std::vector<PoseSample> samples;
        for (int i = 0; i <= 600; ++i) {
            const double t = 0.1 * i;
            samples.push_back({t, 10.0 * t, 3.0 * t, 0.0, std::atan2(3.0, 10.0) + deg2rad(2.0)});
        }
        const double phi = 1.234;
        std::vector<PoseSample> rotated;
        for (const auto& s : samples) {
            rotated.push_back({s.t, std::cos(phi) * s.x - std::sin(phi) * s.y,
                               std::sin(phi) * s.x + std::cos(phi) * s.y, s.z,
                               wrap_pi(s.yaw_sensor + phi)});
        }
        const auto a = gnss_yaw_offset(samples);
        const auto b = gnss_yaw_offset(rotated);
        CHECK(std::abs(wrap_pi(a.yaw_offset - b.yaw_offset)) < 1e-9);
        // the per-axis curvature gate is axis-dependent, so on curved routes
        // the valid set may differ; the offset still agrees closely
        const auto curved = roundabout_route(deg2rad(2.0), 0.0, 3);
        std::vector<PoseSample> curved_rot;
        for (const auto& s : curved) {
            curved_rot.push_back({s.t, std::cos(phi) * s.x - std::sin(phi) * s.y,
                                  std::sin(phi) * s.x + std::cos(phi) * s.y, s.z,
                                  wrap_pi(s.yaw_sensor + phi)});
        }
        CHECK(std::abs(wrap_pi(gnss_yaw_offset(curved).yaw_offset -
                               gnss_yaw_offset(curved_rot).yaw_offset)) < 1e-6);
    }
    SUBCASE("standstill input rejected") {
        std::vector<PoseSample> still;
        for (int i = 0; i < 50; ++i) still.push_back({0.1 * i, 0.0, 0.0, 0.0, 0.0});
        CHECK_THROWS_AS(gnss_yaw_offset(still), Error);
    }
}

TEST_CASE("smoothing spline handles position noise") {
    // 5 cm position noise at 10 Hz makes the interpolating tangent useless;
    // the approximating fit recovers the offset
    std::mt19937_64 rng(31);
    std::normal_distribution<double> pos_noise(0.0, 0.05);
    const double offset = deg2rad(2.0);
    std::vector<PoseSample> samples;
    for (int i = 0; i <= 1200; ++i) {
        const double t = 0.1 * i;
        samples.push_back({t, 10.0 * t + pos_noise(rng), pos_noise(rng), 0.0, offset});
    }
    GnssCalibConfig smooth;
    smooth.spline_ctrl_spacing = 2.0;
    const auto est = gnss_yaw_offset(samples, smooth);
    CHECK(std::abs(est.yaw_offset - offset) < deg2rad(0.1));
    // the interpolating fit chases the noise: far fewer valid samples and a
    // visibly worse tangent
    const auto raw = gnss_yaw_offset(samples);
    CHECK(est.used_count > raw.used_count);
}

TEST_CASE("segment consistency of the offset estimate") {
    // ten 1-minute slices of one noisy drive stay within 0.1 deg of spread
    const double offset = deg2rad(2.0);
    std::vector<double> per_segment;
    std::mt19937_64 rng(99);
    std::normal_distribution<double> noise(0.0, deg2rad(0.1));
    for (int seg = 0; seg < 10; ++seg) {
        std::vector<PoseSample> samples;
        for (int i = 0; i < 600; ++i) {
            const double t = 60.0 * seg + 0.1 * i;
            samples.push_back(
                {t, 10.0 * t, 30.0 * seg, 0.0, wrap_pi(offset + noise(rng))});
        }
        per_segment.push_back(gnss_yaw_offset(samples).yaw_offset);
    }
    CHECK(circular_std(per_segment) < deg2rad(0.1));
    CHECK(std::abs(circular_mean(per_segment) - offset) < deg2rad(0.05));
}
