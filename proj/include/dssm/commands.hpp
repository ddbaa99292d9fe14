#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "dssm/config.hpp"

namespace dssm::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kIoError = 2,
  kConfigError = 3,
  kCheckpointError = 4,
  kDataError = 5,
};

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> checkpoint;  // defaults to <out>/checkpoint.bin
  std::optional<long long> window;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> horizon;
};

// Each command throws on failure; `run` maps exceptions to exit codes and
// prints one `ERROR <code>: message` line on err.
void cmd_train(const CommandOptions& opts, std::ostream& out, std::ostream& err);
void cmd_evaluate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
void cmd_forecast(const CommandOptions& opts, std::ostream& out, std::ostream& err);
void cmd_decompose(const CommandOptions& opts, std::ostream& out, std::ostream& err);
void cmd_synth(const CommandOptions& opts, std::ostream& out, std::ostream& err);

int run(const std::string& command, const CommandOptions& opts, std::ostream& out, std::ostream& err);

// Config file plus command-line overrides.
RunConfig resolve_config(const CommandOptions& opts);

}  // namespace dssm::cli
