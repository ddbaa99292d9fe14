#pragma once

// Flat `key = value` run configuration. Blank lines and `#` comments are
// ignored; unknown keys and malformed values are rejected with the key named.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "dssm/data.hpp"
#include "dssm/model.hpp"
#include "dssm/trainer.hpp"

namespace dssm::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Variant { Full, NoAdl, NoGcrm, NoGtssm };

struct RunConfig {
  std::filesystem::path data_path;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 2025;

  ModelConfig model;
  TrainConfig train;
  DatasetOptions windows;

  data::MissingPolicy missing = data::MissingPolicy::ForwardFill;
  data::SplitRatios ratios;
  std::optional<std::size_t> split_train_end;
  std::optional<std::size_t> split_val_end;
  bool explicit_M = false;  // M given in the file; must match the data
  Variant variant = Variant::Full;
};

// Parses config text. `origin` labels error messages (usually the path).
RunConfig parse_run_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

// Synthetic-series spec, same flat format:
//   N = 2000
//   M = 2
//   noise_std = 0.1
//   seed = 7
//   trend = 0.01:0, 0.02:1:0.0001      slope:intercept[:quad], one per variable
//   seasonal = 1:24:0, 0.5:168:0       amplitude:period:phase for every variable
//   seasonal.1 = 2:12:0                overrides the list for variable 1
data::SynthSpec parse_synth_spec(const std::string& text, const std::string& origin = "<spec>");
data::SynthSpec load_synth_spec(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace dssm::cli
