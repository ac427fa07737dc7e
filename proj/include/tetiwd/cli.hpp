#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>

namespace tetiwd::cli {

// exit codes: 0 success, 1 usage/config error, 2 data validation error,
// 3 runtime failure
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int cmd_simulate(nlohmann::json config);
int cmd_fit(nlohmann::json config);
int cmd_benchmark(nlohmann::json config);
int cmd_evaluate(nlohmann::json config);
int cmd_track(nlohmann::json config);
int cmd_report(nlohmann::json config);

// full argv entry point (argument parsing, dispatch, exit-code mapping)
int run_cli(int argc, char** argv);

// atomic file replacement: write to a temporary then rename into place
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace tetiwd::cli
