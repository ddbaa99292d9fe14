#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dssm/trainer.hpp"

namespace dssm {

namespace {

data::WindowSet windows_or_empty(const data::SeriesFrame& seg, const DatasetOptions& o,
                                 std::size_t stride, data::Split split,
                                 std::vector<std::string>* warnings) {
  if (seg.length() >= o.T + o.H) return data::make_windows(seg, o.T, o.H, stride, split);
  data::WindowSet w;
  w.split = split;
  w.T = o.T;
  w.H = o.H;
  w.segment_length = seg.length();
  if (warnings) {
    warnings->push_back(std::string(data::split_name(split)) + " segment has " +
                        std::to_string(seg.length()) + " rows, fewer than T + H = " +
                        std::to_string(o.T + o.H) + "; it contributes no windows");
  }
  return w;
}

Checkpoint snapshot(const ModelConfig& model, const ModelParams& params, const AdamState& opt,
                    const std::mt19937_64& rng, std::size_t epoch) {
  Checkpoint ck;
  ck.config_echo = describe(model);
  for (const auto& [name, t] : params.named()) ck.tensors.emplace_back(name, t.detach());
  ck.optimizer = opt;
  std::ostringstream rs;
  rs << rng;
  ck.rng_state = rs.str();
  ck.epoch = epoch;
  return ck;
}

}  // namespace

Dataset prepare_dataset(const data::Segments& segments, const DatasetOptions& options,
                        std::vector<std::string>* warnings) {
  if (segments.train.length() == 0) throw data::DataError("training split is empty");
  if (segments.train.length() < options.T + options.H) {
    throw data::DataError("train segment has " + std::to_string(segments.train.length()) +
                          " rows; windows need at least T + H = " +
                          std::to_string(options.T + options.H));
  }
  Dataset d;
  d.scaler = data::Scaler::fit(segments.train);
  d.train = d.scaler.transform(segments.train);
  d.val = d.scaler.transform(segments.val);
  d.test = d.scaler.transform(segments.test);
  d.train_windows = data::make_windows(d.train, options.T, options.H, options.train_stride, data::Split::Train);
  d.val_windows = windows_or_empty(d.val, options, options.eval_stride, data::Split::Val, warnings);
  d.test_windows = windows_or_empty(d.test, options, options.eval_stride, data::Split::Test, warnings);
  return d;
}

Metrics evaluate(const ModelConfig& model, const ModelParams& params,
                 const data::SeriesFrame& segment, const data::WindowSet& windows) {
  NoGradGuard guard;
  MetricsAccumulator acc;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const ForwardResult r = model_forward(model, params, windows.input(segment, i));
    acc.add(r.forecast, windows.target(segment, i));
  }
  return acc.result();
}

TrainResult train(const ModelConfig& model, const TrainConfig& config, const Dataset& data,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  model.validate();
  if (data.train_windows.size() == 0) throw data::DataError("training split has no windows");
  if (config.batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");

  std::mt19937_64 rng(config.seed);
  ModelParams params = init_params(model, rng);
  const NamedTensors named = params.named();
  AdamState opt;
  opt.config = config.adam;

  std::vector<std::size_t> order(data.train_windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  bool have_best = false;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double inv = 1.0 / static_cast<double>(end - begin);
      for (const auto& [name, p] : named) {
        Tensor t = p;
        t.zero_grad();
      }
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t w = order[k];
        const ForwardResult r = model_forward(model, params, data.train_windows.input(data.train, w));
        const LossBreakdown loss = total_loss(r.forecast, data.train_windows.target(data.train, w),
                                              r.refined, r.embedded, config.weights);
        loss_sum += loss.total.item();
        scale(loss.total, inv).backward();
      }
      if (config.clip_norm > 0.0) clip_grad_norm(named, config.clip_norm);
      adam_step(named, opt);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    if (data.val_windows.size() > 0) {
      const Metrics m = evaluate(model, params, data.val, data.val_windows);
      rec.val_mse = m.mse;
      rec.val_mae = m.mae;
    } else {
      rec.val_mse = std::numeric_limits<double>::quiet_NaN();
      rec.val_mae = std::numeric_limits<double>::quiet_NaN();
    }
    result.history.push_back(rec);

    const bool no_val = data.val_windows.size() == 0;
    if (no_val || !have_best || rec.val_mse < best_val) {
      best_val = rec.val_mse;
      have_best = true;
      result.best_epoch = epoch;
      result.best = snapshot(model, params, opt, rng, epoch);
    }
    if (on_epoch) on_epoch(rec);
  }

  if (!have_best) result.best = snapshot(model, params, opt, rng, 0);
  result.params = init_params(model, std::uint64_t{0});
  load_into(result.best, result.params);
  return result;
}

}  // namespace dssm
