#pragma once

// Series ingestion, chronological splits, sliding windows, and a synthetic
// generator whose trend / seasonal / noise addends are known exactly.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "dssm/tensor.hpp"

namespace dssm::data {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file could not be opened, read, or written.
class IoError : public DataError {
 public:
  using DataError::DataError;
};

struct SeriesFrame {
  std::vector<std::string> names;
  std::vector<std::string> timestamps;  // may be empty
  Tensor values;                        // [N x M]

  std::size_t length() const { return values.defined() ? values.dim(0) : 0; }
  std::size_t width() const { return names.size(); }
  double at(std::size_t t, std::size_t m) const { return values[t * width() + m]; }
  // Rows [begin, end) as a fresh constant tensor.
  Tensor rows(std::size_t begin, std::size_t end) const;
  SeriesFrame segment(std::size_t begin, std::size_t end) const;
};

enum class MissingPolicy { ForwardFill, Error };

struct CsvOptions {
  MissingPolicy missing = MissingPolicy::ForwardFill;
};

// First row is the header, first column a timestamp (kept, not modeled).
SeriesFrame load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
// Values are written with 17 significant digits.
void write_csv(const std::filesystem::path& path, const SeriesFrame& frame);

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

struct Segments {
  SeriesFrame train, val, test;
  std::size_t val_begin = 0;   // row offsets into the source frame
  std::size_t test_begin = 0;
};

// Contiguous chronological split. Lengths are floor(ratio * N) for val and
// test; the remainder goes to train.
Segments chrono_split(const SeriesFrame& frame, const SplitRatios& ratios = {});
// Explicit boundaries: train [0, train_end), val [train_end, val_end), test [val_end, N).
Segments split_at(const SeriesFrame& frame, std::size_t train_end, std::size_t val_end);

enum class Split { Train, Val, Test };
const char* split_name(Split s);

// Index-only view of the windows of one segment. Window i reads input rows
// [starts[i], starts[i] + T) and target rows [starts[i] + T, starts[i] + T + H).
struct WindowSet {
  Split split = Split::Train;
  std::size_t T = 0;
  std::size_t H = 0;
  std::size_t segment_length = 0;
  std::vector<std::size_t> starts;

  std::size_t size() const { return starts.size(); }
  Tensor input(const SeriesFrame& segment, std::size_t i) const;
  Tensor target(const SeriesFrame& segment, std::size_t i) const;
};

// floor((N - T - H) / stride) + 1 for N >= T + H, else 0.
std::size_t window_count(std::size_t n, std::size_t T, std::size_t H, std::size_t stride);

// Throws DataError when the segment is shorter than T + H.
WindowSet make_windows(const SeriesFrame& segment, std::size_t T, std::size_t H,
                       std::size_t stride = 1, Split split = Split::Train);

// Column standardization fitted on one frame (population std; 1 for constant
// columns) and applied to others. Benchmark metrics are reported in this space.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> std;

  static Scaler fit(const SeriesFrame& frame);
  SeriesFrame transform(const SeriesFrame& frame) const;
  Tensor inverse(const Tensor& values) const;  // [n x M]
};

struct TrendSpec {
  double slope = 0.0;
  double intercept = 0.0;
  double quad = 0.0;
};

struct SeasonSpec {
  double amplitude = 0.0;
  double period = 0.0;
  double phase = 0.0;  // radians
};

struct SynthSpec {
  std::size_t N = 0;
  std::size_t M = 0;
  std::vector<TrendSpec> trend;                 // one per variable
  std::vector<std::vector<SeasonSpec>> seasonal;  // one list per variable
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthSeries {
  SeriesFrame series;
  SeriesFrame trend;
  SeriesFrame seasonal;
  SeriesFrame noise;
};

// series = (trend + seasonal) + noise, evaluated in that order.
SynthSeries synth_generate(const SynthSpec& spec);

}  // namespace dssm::data
