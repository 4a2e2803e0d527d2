#pragma once

#include <iosfwd>
#include <optional>
#include <string>

namespace kglab::tools {

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct RunRequest {
    std::string command;
    std::optional<std::string> config;  ///< built-in defaults when absent
    std::optional<std::string> out;     ///< overrides experiment.out
    std::string method = "feynman";
    std::string axis = "dt";
};

/// Runs one command end to end and returns the process exit code. Error
/// documents go to `out`, human-readable messages to `err`.
int run(const RunRequest& req, std::ostream& out, std::ostream& err);

} // namespace kglab::tools
