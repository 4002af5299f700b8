#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace exostitch {

enum class ErrorCode {
    contract_violation,
    numeric,
    configuration,
    exhaustion,
    empty_database,
    integrity,
    version_mismatch,
    malformed,
    checksum,
    io,
    bad_policy,
    unknown_db,
    unknown_set,
    bad_params,
};

// Machine-readable spelling used by the CLI and the HTTP service.
std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Raised when stitching runs out of feasible candidates.
class ExhaustionError : public Error {
public:
    ExhaustionError(const std::string& message, int time_step, std::size_t trajectories_completed)
        : Error(ErrorCode::exhaustion, message),
          time_step_(time_step),
          trajectories_completed_(trajectories_completed) {}

    int time_step() const noexcept { return time_step_; }
    std::size_t trajectories_completed() const noexcept { return trajectories_completed_; }

private:
    int time_step_;
    std::size_t trajectories_completed_;
};

} // namespace exostitch
