#include <cmath>
#include <string>

#include "dssm/data.hpp"

namespace dssm::data {

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Segments split_at(const SeriesFrame& frame, std::size_t train_end, std::size_t val_end) {
  const std::size_t n = frame.length();
  if (train_end > val_end || val_end > n) {
    throw DataError("split boundaries " + std::to_string(train_end) + ", " +
                    std::to_string(val_end) + " invalid for a series of length " +
                    std::to_string(n));
  }
  Segments s;
  s.train = frame.segment(0, train_end);
  s.val = frame.segment(train_end, val_end);
  s.test = frame.segment(val_end, n);
  s.val_begin = train_end;
  s.test_begin = val_end;
  return s;
}

Segments chrono_split(const SeriesFrame& frame, const SplitRatios& ratios) {
  if (!(ratios.train >= 0.0 && ratios.val >= 0.0 && ratios.test >= 0.0) ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw DataError("split ratios must be non-negative and sum to 1");
  }
  const std::size_t n = frame.length();
  const double nd = static_cast<double>(n);
  // The small slack absorbs products like 0.7 * 10 landing a hair below 7.
  const auto n_val = static_cast<std::size_t>(std::floor(ratios.val * nd + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(ratios.test * nd + 1e-9));
  const std::size_t n_train = n - n_val - n_test;
  return split_at(frame, n_train, n_train + n_val);
}

std::size_t window_count(std::size_t n, std::size_t T, std::size_t H, std::size_t stride) {
  if (stride == 0) throw DataError("window stride must be >= 1");
  if (n < T + H) return 0;
  return (n - T - H) / stride + 1;
}

WindowSet make_windows(const SeriesFrame& segment, std::size_t T, std::size_t H,
                       std::size_t stride, Split split) {
  if (T == 0 || H == 0) throw DataError("look-back and horizon must be >= 1");
  const std::size_t n = segment.length();
  if (n < T + H) {
    throw DataError(std::string(split_name(split)) + " segment has " + std::to_string(n) +
                    " rows; windows need at least T + H = " + std::to_string(T + H));
  }
  WindowSet w;
  w.split = split;
  w.T = T;
  w.H = H;
  w.segment_length = n;
  const std::size_t count = window_count(n, T, H, stride);
  w.starts.reserve(count);
  for (std::size_t i = 0; i < count; ++i) w.starts.push_back(i * stride);
  return w;
}

Tensor WindowSet::input(const SeriesFrame& segment, std::size_t i) const {
  return segment.rows(starts.at(i), starts.at(i) + T);
}

Tensor WindowSet::target(const SeriesFrame& segment, std::size_t i) const {
  return segment.rows(starts.at(i) + T, starts.at(i) + T + H);
}

Scaler Scaler::fit(const SeriesFrame& frame) {
  const std::size_t n = frame.length(), m = frame.width();
  if (n == 0) throw DataError("cannot fit a scaler on an empty segment");
  Scaler s;
  s.mean.assign(m, 0.0);
  s.std.assign(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) acc += frame.at(t, j);
    s.mean[j] = acc / static_cast<double>(n);
    double var = 0.0;
    for (std::size_t t = 0; t < n; ++t) var += (frame.at(t, j) - s.mean[j]) * (frame.at(t, j) - s.mean[j]);
    const double sd = std::sqrt(var / static_cast<double>(n));
    s.std[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

SeriesFrame Scaler::transform(const SeriesFrame& frame) const {
  const std::size_t n = frame.length(), m = frame.width();
  if (m != mean.size()) throw DataError("scaler fitted on " + std::to_string(mean.size()) + " columns, got " + std::to_string(m));
  std::vector<double> v(n * m);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t j = 0; j < m; ++j) v[t * m + j] = (frame.at(t, j) - mean[j]) / std[j];
  SeriesFrame out;
  out.names = frame.names;
  out.timestamps = frame.timestamps;
  out.values = Tensor::from({n, m}, std::move(v));
  return out;
}

Tensor Scaler::inverse(const Tensor& values) const {
  const std::size_t m = mean.size();
  if (values.rank() != 2 || values.dim(1) != m) throw DataError("scaler inverse: shape " + shape_str(values.shape()));
  std::vector<double> v(values.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = values[i] * std[i % m] + mean[i % m];
  return Tensor::from(values.shape(), std::move(v));
}

}  // namespace dssm::data
