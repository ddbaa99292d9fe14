#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dssm/data.hpp"
#include "dssm/model.hpp"
#include "dssm/objective.hpp"
#include "dssm/tensor.hpp"

namespace dssm {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// ---- Adam ------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t t = 0;
  std::vector<std::vector<double>> m;  // first moments, one per parameter
  std::vector<std::vector<double>> v;  // second moments
};

class OptimizerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One bias-corrected Adam update from the gradients stored on the tensors.
// A missing gradient counts as zero. A non-finite gradient aborts the step
// before any parameter moves and names the offending parameter.
void adam_step(const NamedTensors& params, AdamState& state);

// Rescales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(const NamedTensors& params, double max_norm);

// ---- checkpoints -----------------------------------------------------------

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { Io, BadHeader, Version, Truncated, Corrupt, UnknownTensor, MissingTensor, ShapeMismatch };
  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::string config_echo;  // "key = value" lines
  NamedTensors tensors;     // detached copies
  AdamState optimizer;
  std::string rng_state;
  std::uint64_t epoch = 0;
};

// Little-endian container:
//   "DSSMCKPT" | u32 version | u64 len + config text
//   | u32 count | per tensor: u32 len + name, u32 rank, u64 dims...
//   | f64 payloads in declaration order
//   | u64 t | f64 lr, beta1, beta2, eps | u8 has_moments [| m payloads | v payloads]
//   | u64 len + rng text | u64 epoch
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::vector<unsigned char> serialize_checkpoint(const Checkpoint& ck);
Checkpoint deserialize_checkpoint(const std::vector<unsigned char>& bytes);

// Copies checkpoint tensors into the matching model parameters. Every model
// parameter must be present with the same shape and no extra names may appear.
void load_into(const Checkpoint& ck, const ModelParams& params);

std::string describe(const ModelConfig& config);

// ---- training --------------------------------------------------------------

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 1;
  AdamConfig adam;
  double clip_norm = 0.0;  // 0 disables clipping
  LossWeights weights;
  std::uint64_t seed = 2025;
  bool shuffle = true;
};

// Standardized segments and their windows.
struct Dataset {
  data::Scaler scaler;
  data::SeriesFrame train, val, test;
  data::WindowSet train_windows, val_windows, test_windows;
};

struct DatasetOptions {
  std::size_t T = 96;
  std::size_t H = 96;
  std::size_t train_stride = 1;
  std::size_t eval_stride = 1;
};

// Fits the scaler on the train segment. Val/test segments shorter than T + H
// yield zero windows and a warning; an empty train split is an error.
Dataset prepare_dataset(const data::Segments& segments, const DatasetOptions& options,
                        std::vector<std::string>* warnings = nullptr);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_mse = 0.0;
  double val_mae = 0.0;
};

struct TrainResult {
  ModelParams params;  // best-validation parameters
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  Checkpoint best;
};

TrainResult train(const ModelConfig& model, const TrainConfig& config, const Dataset& data,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

// Mean MSE / MAE over every window of a segment (standardized space).
Metrics evaluate(const ModelConfig& model, const ModelParams& params,
                 const data::SeriesFrame& segment, const data::WindowSet& windows);

}  // namespace dssm
