#include "carcal/io.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace carcal::io {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(errc::io_error, what); }

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail("cannot open for reading: " + path);
    return f;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) fail("cannot open for writing: " + path);
    return f;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

void expect_header(std::ifstream& f, const std::string& expected, const std::string& path) {
    std::string line;
    if (!std::getline(f, line)) fail("empty file: " + path);
    if (trim(line) != expected) {
        fail("bad header in " + path + ": expected '" + expected + "', got '" + trim(line) + "'");
    }
}

struct RowReader {
    std::ifstream f;
    std::string path;
    size_t line_no = 1;  // header consumed
    std::string line{};

    bool next(std::vector<std::string>& fields, size_t expected_count) {
        while (std::getline(f, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            fields = split_csv(line);
            if (fields.size() != expected_count) {
                fail(path + ":" + std::to_string(line_no) + ": expected " +
                     std::to_string(expected_count) + " fields, got " +
                     std::to_string(fields.size()));
            }
            return true;
        }
        return false;
    }

    double num(const std::string& s) const {
        const double v = parse_double(s, path + ":" + std::to_string(line_no));
        if (!std::isfinite(v)) {
            fail(path + ":" + std::to_string(line_no) + ": non-finite value '" + s + "'");
        }
        return v;
    }

    [[noreturn]] void reject(const std::string& why) const {
        fail(path + ":" + std::to_string(line_no) + ": " + why);
    }
};

}  // namespace

double parse_double(const std::string& raw, const std::string& context) {
    const std::string s = trim(raw);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        fail(context + ": not a number: '" + s + "'");
    }
    return v;
}

long parse_long(const std::string& raw, const std::string& context) {
    const std::string s = trim(raw);
    long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        fail(context + ": not an integer: '" + s + "'");
    }
    return v;
}

bool parse_bool(const std::string& raw, const std::string& context) {
    const std::string s = trim(raw);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    fail(context + ": not a boolean: '" + s + "'");
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<PoseRecord> read_pose_csv(const std::string& path) {
    auto f = open_in(path);
    expect_header(f, "t,x,y,z,qw,qx,qy,qz", path);
    RowReader rr{std::move(f), path};
    std::vector<PoseRecord> out;
    std::vector<std::string> fields;
    while (rr.next(fields, 8)) {
        PoseRecord r;
        r.t = rr.num(fields[0]);
        r.x = rr.num(fields[1]);
        r.y = rr.num(fields[2]);
        r.z = rr.num(fields[3]);
        r.qw = rr.num(fields[4]);
        r.qx = rr.num(fields[5]);
        r.qy = rr.num(fields[6]);
        r.qz = rr.num(fields[7]);
        if (!out.empty() && !(r.t > out.back().t)) {
            fail(path + ":" + std::to_string(rr.line_no) + ": timestamps must strictly increase");
        }
        out.push_back(r);
    }
    return out;
}

void write_pose_csv(const std::string& path, std::span<const PoseRecord> poses) {
    auto f = open_out(path);
    f << "t,x,y,z,qw,qx,qy,qz\n";
    for (const auto& p : poses) {
        f << format_double(p.t) << ',' << format_double(p.x) << ',' << format_double(p.y) << ','
          << format_double(p.z) << ',' << format_double(p.qw) << ',' << format_double(p.qx) << ','
          << format_double(p.qy) << ',' << format_double(p.qz) << '\n';
    }
}

std::vector<VPObservation> read_vp_csv(const std::string& path) {
    auto f = open_in(path);
    expect_header(f, "t,vp_u,vp_v,hl_theta", path);
    RowReader rr{std::move(f), path};
    std::vector<VPObservation> out;
    std::vector<std::string> fields;
    while (rr.next(fields, 4)) {
        out.push_back({rr.num(fields[0]), rr.num(fields[1]), rr.num(fields[2]), rr.num(fields[3])});
    }
    return out;
}

void write_vp_csv(const std::string& path, std::span<const VPObservation> rows) {
    auto f = open_out(path);
    f << "t,vp_u,vp_v,hl_theta\n";
    for (const auto& r : rows) {
        f << format_double(r.t) << ',' << format_double(r.vp_u) << ',' << format_double(r.vp_v)
          << ',' << format_double(r.hl_theta) << '\n';
    }
}

std::vector<LineFrame> read_lines_csv(const std::string& path) {
    auto f = open_in(path);
    expect_header(f, "t,u1,v1,u2,v2", path);
    RowReader rr{std::move(f), path};
    std::vector<LineFrame> out;
    std::vector<std::string> fields;
    while (rr.next(fields, 5)) {
        const double t = rr.num(fields[0]);
        if (out.empty() || std::abs(t - out.back().t) > 1e-9) {
            out.push_back({t, {}});
        }
        out.back().lines.push_back(
            {rr.num(fields[1]), rr.num(fields[2]), rr.num(fields[3]), rr.num(fields[4])});
    }
    return out;
}

void write_lines_csv(const std::string& path, std::span<const LineFrame> frames) {
    auto f = open_out(path);
    f << "t,u1,v1,u2,v2\n";
    for (const auto& fr : frames) {
        for (const auto& l : fr.lines) {
            f << format_double(fr.t) << ',' << format_double(l.u1) << ',' << format_double(l.v1)
              << ',' << format_double(l.u2) << ',' << format_double(l.v2) << '\n';
        }
    }
}

Intrinsics read_intrinsics(const std::string& path) {
    Intrinsics K;
    bool have_fx = false, have_fy = false, have_cx = false, have_cy = false;
    for (const auto& [key, value] : read_kv_file(path)) {
        const double v = parse_double(value, path + " key " + key);
        if (key == "fx") {
            K.fx = v;
            have_fx = true;
        } else if (key == "fy") {
            K.fy = v;
            have_fy = true;
        } else if (key == "cx") {
            K.cx = v;
            have_cx = true;
        } else if (key == "cy") {
            K.cy = v;
            have_cy = true;
        } else if (key == "skew") {
            K.skew = v;
        } else {
            fail(path + ": unknown intrinsics key '" + key + "'");
        }
    }
    if (!(have_fx && have_fy && have_cx && have_cy)) {
        fail(path + ": intrinsics need fx, fy, cx, cy");
    }
    return K;
}

void write_intrinsics(const std::string& path, const Intrinsics& K) {
    auto f = open_out(path);
    f << "fx = " << format_double(K.fx) << "\n"
      << "fy = " << format_double(K.fy) << "\n"
      << "cx = " << format_double(K.cx) << "\n"
      << "cy = " << format_double(K.cy) << "\n"
      << "skew = " << format_double(K.skew) << "\n";
}

std::vector<RadarPoint> read_radar_csv(const std::string& path) {
    auto f = open_in(path);
    expect_header(f, "t,track_id,range,azimuth,doppler,ego_speed,ego_x,ego_y", path);
    RowReader rr{std::move(f), path};
    std::vector<RadarPoint> out;
    std::vector<std::string> fields;
    while (rr.next(fields, 8)) {
        RadarPoint p;
        p.t = rr.num(fields[0]);
        p.track_id = static_cast<int>(parse_long(fields[1], path));
        p.range = rr.num(fields[2]);
        p.azimuth = rr.num(fields[3]);
        p.doppler = rr.num(fields[4]);
        p.ego_speed = rr.num(fields[5]);
        p.ego_x = rr.num(fields[6]);
        p.ego_y = rr.num(fields[7]);
        if (!(p.range > 0.0)) rr.reject("range must be positive");
        if (std::abs(p.azimuth) > kPi + 1e-9) rr.reject("azimuth outside [-pi, pi]");
        if (p.ego_speed < 0.0) rr.reject("ego_speed must be non-negative");
        out.push_back(p);
    }
    return out;
}

void write_radar_csv(const std::string& path, std::span<const RadarPoint> rows) {
    auto f = open_out(path);
    f << "t,track_id,range,azimuth,doppler,ego_speed,ego_x,ego_y\n";
    for (const auto& p : rows) {
        f << format_double(p.t) << ',' << p.track_id << ',' << format_double(p.range) << ','
          << format_double(p.azimuth) << ',' << format_double(p.doppler) << ','
          << format_double(p.ego_speed) << ',' << format_double(p.ego_x) << ','
          << format_double(p.ego_y) << '\n';
    }
}

std::vector<PointCloudFrame> read_lidar_dir(const std::string& dir) {
    const fs::path root(dir);
    const fs::path index = root / "index.csv";
    auto f = open_in(index.string());
    expect_header(f, "frame_index,t", index.string());
    RowReader rr{std::move(f), index.string()};
    std::vector<PointCloudFrame> out;
    std::vector<std::string> fields;
    while (rr.next(fields, 2)) {
        const long idx = parse_long(fields[0], index.string());
        PointCloudFrame frame;
        frame.t = rr.num(fields[1]);
        const fs::path cloud = root / (std::to_string(idx) + ".csv");
        auto cf = open_in(cloud.string());
        expect_header(cf, "x,y,z", cloud.string());
        RowReader cr{std::move(cf), cloud.string()};
        std::vector<std::string> pf;
        while (cr.next(pf, 3)) {
            frame.points.emplace_back(cr.num(pf[0]), cr.num(pf[1]), cr.num(pf[2]));
        }
        out.push_back(std::move(frame));
    }
    return out;
}

void write_lidar_dir(const std::string& dir, std::span<const PointCloudFrame> frames) {
    const fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) fail("cannot create directory: " + dir);
    auto idx = open_out((root / "index.csv").string());
    idx << "frame_index,t\n";
    for (size_t i = 0; i < frames.size(); ++i) {
        idx << i << ',' << format_double(frames[i].t) << '\n';
        auto f = open_out((root / (std::to_string(i) + ".csv")).string());
        f << "x,y,z\n";
        for (const auto& p : frames[i].points) {
            f << format_double(p.x()) << ',' << format_double(p.y()) << ','
              << format_double(p.z()) << '\n';
        }
    }
}

std::vector<std::pair<std::string, std::string>> read_kv_file(const std::string& path) {
    auto f = open_in(path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

}  // namespace carcal::io
