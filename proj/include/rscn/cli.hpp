#pragma once

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace rscn {

enum ExitCode : int { exit_ok = 0, exit_usage = 2, exit_data = 3, exit_numeric = 4 };

/// Resolved settings of one command. Flags override manifest fields, which
/// override defaults.
struct RunManifest {
    std::string command;
    nlohmann::json task;  ///< shorthand name or task manifest object
    nlohmann::json model; ///< {"type": "rscn"|"esn"|"scr", hyperparameters...}
    nlohmann::json online;
    std::string out = ".";
    std::uint64_t seed = 1;
    long trials = 20;
    std::string grid;
    std::string split = "test";
    std::string model_file;

    static RunManifest from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace rscn
