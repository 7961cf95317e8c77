#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace carcal {

/// Exception carrying a stable machine-readable code alongside the message.
/// Codes are reported verbatim in CLI error reports.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

namespace errc {
// Shared error codes. Kept as plain strings so reports stay greppable.
inline constexpr const char* invalid_input = "invalid_input";
inline constexpr const char* empty_input = "empty_input";
inline constexpr const char* degenerate_mean = "degenerate_mean";
inline constexpr const char* antiparallel = "antiparallel";
inline constexpr const char* out_of_domain = "out_of_domain";
inline constexpr const char* standstill = "standstill";
inline constexpr const char* no_valid_data = "no_valid_data";
inline constexpr const char* behind_camera = "behind_camera";
inline constexpr const char* arcsin_domain = "arcsin_domain";
inline constexpr const char* degenerate_hypothesis = "degenerate_hypothesis";
inline constexpr const char* not_ground_plane = "not_ground_plane";
inline constexpr const char* no_ground_plane = "no_ground_plane";
inline constexpr const char* no_consensus = "no_consensus";
inline constexpr const char* unobservable = "unobservable";
inline constexpr const char* collinear = "collinear";
inline constexpr const char* degenerate_baseline = "degenerate_baseline";
inline constexpr const char* indeterminate = "indeterminate";
inline constexpr const char* no_straight_segment = "no_straight_segment";
inline constexpr const char* no_static_object = "no_static_object";
inline constexpr const char* zero_confidence = "zero_confidence";
inline constexpr const char* io_error = "io_error";
inline constexpr const char* bad_config = "bad_config";
}  // namespace errc

}  // namespace carcal
