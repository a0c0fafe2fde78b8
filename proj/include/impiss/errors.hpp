#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace impiss {

enum class ErrorKind {
    Domain,          // negative argument to a comparison function
    Bracketing,      // root not inside the supplied bracket image
    ClassViolation,  // monotonicity / class property broken during a solve
    Argument,
    RateSign,        // rate not positive where a transform needs it
    Image,           // value below the lower limit of a transform
    BlowUp,
    Range,           // time outside the simulated horizon
    Grid,
    SegmentBoundary,
    Precondition,
    Sequence,        // impulse gaps incompatible with a dwell bound
    Orientation,     // jump rate does not contract where it must
    Construction,
    Config,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised by the simulator when a state component leaves the finite range.
class BlowUpError : public Error {
public:
    BlowUpError(double last_finite_time, const std::string& what)
        : Error(ErrorKind::BlowUp, what), last_finite_time_(last_finite_time) {}

    [[nodiscard]] double last_finite_time() const noexcept { return last_finite_time_; }

private:
    double last_finite_time_;
};

/// Scenario loading failure; `path` names the offending config node (e.g. "system.flow.matrix").
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& what)
        : Error(ErrorKind::Config, path + ": " + what), path_(std::move(path)) {}

    [[nodiscard]] const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace impiss
