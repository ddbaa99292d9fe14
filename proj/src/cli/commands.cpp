#include "dssm/commands.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include "dssm/objective.hpp"
#include "dssm/trainer.hpp"

namespace dssm::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw data::IoError("cannot write '" + path.string() + "'");
  return f;
}

void finish(std::ofstream& f, const fs::path& path) {
  f.flush();
  if (!f) throw data::IoError("write to '" + path.string() + "' failed");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw data::IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

// Rows labelled by variable name, columns d0..d{D-1}.
void write_matrix(const fs::path& path, const std::vector<std::string>& rows, const Tensor& m) {
  auto f = open_out(path);
  f << "variable";
  for (std::size_t j = 0; j < m.dim(1); ++j) f << ",d" << j;
  f << '\n';
  for (std::size_t i = 0; i < m.dim(0); ++i) {
    f << rows[i];
    for (std::size_t j = 0; j < m.dim(1); ++j) f << ',' << fmt(m.at(i, j));
    f << '\n';
  }
  finish(f, path);
}

void write_series(const fs::path& path, const std::vector<std::string>& names, const Tensor& values,
                  const std::vector<std::string>& stamps = {}) {
  data::SeriesFrame f;
  f.names = names;
  f.timestamps = stamps;
  f.values = values;
  data::write_csv(path, f);
}

struct Prepared {
  RunConfig rc;
  data::SeriesFrame frame;
  Dataset dataset;
};

Prepared prepare(const CommandOptions& opts, std::ostream& err) {
  Prepared p;
  p.rc = resolve_config(opts);
  if (p.rc.data_path.empty()) throw ConfigError("config sets no data_path");
  p.frame = data::load_csv(p.rc.data_path, {p.rc.missing});
  if (p.rc.explicit_M && p.rc.model.M != p.frame.width()) {
    throw ConfigError("config sets M = " + std::to_string(p.rc.model.M) + " but '" + p.rc.data_path.string() +
                      "' has " + std::to_string(p.frame.width()) + " variables");
  }
  p.rc.model.M = p.frame.width();
  const data::Segments seg = p.rc.split_train_end
                                 ? data::split_at(p.frame, *p.rc.split_train_end, *p.rc.split_val_end)
                                 : data::chrono_split(p.frame, p.rc.ratios);
  std::vector<std::string> warnings;
  p.dataset = prepare_dataset(seg, p.rc.windows, &warnings);
  for (const auto& w : warnings) err << "WARNING: " << w << '\n';
  return p;
}

fs::path checkpoint_path(const CommandOptions& opts, const RunConfig& rc) {
  return opts.checkpoint ? *opts.checkpoint : rc.out_dir / "checkpoint.bin";
}

ModelParams restore(const Prepared& p, const fs::path& path) {
  const Checkpoint ck = load_checkpoint(path);
  ModelParams params = init_params(p.rc.model, std::uint64_t{0});
  load_into(ck, params);
  return params;
}

void write_test_metrics(const fs::path& path, std::size_t horizon, const Metrics& m) {
  auto f = open_out(path);
  f << "split,horizon,mse,mae\n";
  f << "test," << horizon << ',' << fmt(m.mse) << ',' << fmt(m.mae) << '\n';
  finish(f, path);
}

void report_test(std::ostream& out, std::size_t horizon, const Metrics& m) {
  out << "test horizon=" << horizon << " mse=" << fmt(m.mse) << " mae=" << fmt(m.mae) << '\n';
}

std::size_t window_index(const CommandOptions& opts, const data::WindowSet& windows) {
  const long long w = opts.window.value_or(0);
  if (windows.size() == 0) throw data::DataError("the test split has no windows");
  if (w < 0 || static_cast<std::size_t>(w) >= windows.size()) {
    throw data::DataError("window " + std::to_string(w) + " is out of range; valid test windows are 0.." +
                          std::to_string(windows.size() - 1));
  }
  return static_cast<std::size_t>(w);
}

}  // namespace

RunConfig resolve_config(const CommandOptions& opts) {
  RunConfig rc = load_run_config(opts.config);
  if (opts.seed) {
    rc.seed = *opts.seed;
    rc.train.seed = *opts.seed;
  }
  if (opts.out) rc.out_dir = *opts.out;
  return rc;
}

void cmd_train(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  if (opts.horizon) throw ConfigError("--horizon is not accepted by train; set H in the config");
  Prepared p = prepare(opts, err);
  ensure_dir(p.rc.out_dir);

  const fs::path metrics_path = p.rc.out_dir / "metrics.csv";
  auto metrics = open_out(metrics_path);
  metrics << "epoch,train_loss,val_mse,val_mae\n";
  const TrainResult result = train(p.rc.model, p.rc.train, p.dataset, [&](const EpochRecord& r) {
    metrics << r.epoch << ',' << fmt(r.train_loss) << ',' << fmt(r.val_mse) << ',' << fmt(r.val_mae) << '\n';
    metrics.flush();
    out << "epoch " << r.epoch << " train_loss=" << fmt(r.train_loss) << " val_mse=" << fmt(r.val_mse)
        << " val_mae=" << fmt(r.val_mae) << '\n';
  });
  finish(metrics, metrics_path);

  const fs::path ck_path = p.rc.out_dir / "checkpoint.bin";
  save_checkpoint(ck_path, result.best);
  out << "best epoch " << result.best_epoch << " saved to " << ck_path.string() << '\n';

  const Metrics test = evaluate(p.rc.model, result.params, p.dataset.test, p.dataset.test_windows);
  write_test_metrics(p.rc.out_dir / "test_metrics.csv", p.rc.model.H, test);
  report_test(out, p.rc.model.H, test);
}

void cmd_evaluate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  Prepared p = prepare(opts, err);
  if (opts.horizon && *opts.horizon != p.rc.model.H) {
    throw ConfigError("--horizon " + std::to_string(*opts.horizon) + " conflicts with the trained head (H = " +
                      std::to_string(p.rc.model.H) + "); the horizon cannot be changed after training");
  }
  const ModelParams params = restore(p, checkpoint_path(opts, p.rc));
  const Metrics test = evaluate(p.rc.model, params, p.dataset.test, p.dataset.test_windows);
  ensure_dir(p.rc.out_dir);
  write_test_metrics(p.rc.out_dir / "eval_metrics.csv", p.rc.model.H, test);
  report_test(out, p.rc.model.H, test);
}

void cmd_forecast(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  if (opts.horizon) throw ConfigError("--horizon is not accepted by forecast; the head fixes H");
  Prepared p = prepare(opts, err);
  const ModelParams params = restore(p, checkpoint_path(opts, p.rc));
  const std::size_t T = p.rc.model.T;

  Tensor input;
  std::string label;
  if (opts.window) {
    const std::size_t w = window_index(opts, p.dataset.test_windows);
    input = p.dataset.test_windows.input(p.dataset.test, w);
    label = "test window " + std::to_string(w);
  } else {
    if (p.frame.length() < T) {
      throw data::DataError("series has " + std::to_string(p.frame.length()) + " rows; forecasting needs T = " +
                            std::to_string(T));
    }
    const data::SeriesFrame tail = p.dataset.scaler.transform(p.frame.segment(p.frame.length() - T, p.frame.length()));
    input = tail.values;
    label = "the last " + std::to_string(T) + " rows";
  }
  Tensor forecast;
  {
    NoGradGuard guard;
    forecast = model_forward(p.rc.model, params, input).forecast;
  }
  ensure_dir(p.rc.out_dir);
  const fs::path path = p.rc.out_dir / "forecast.csv";
  write_series(path, p.frame.names, p.dataset.scaler.inverse(forecast));
  out << "forecast of " << p.rc.model.H << " steps from " << label << " written to " << path.string() << '\n';
}

void cmd_decompose(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  if (opts.horizon) throw ConfigError("--horizon is not accepted by decompose; the head fixes H");
  Prepared p = prepare(opts, err);
  const ModelParams params = restore(p, checkpoint_path(opts, p.rc));
  const std::size_t w = window_index(opts, p.dataset.test_windows);
  const auto& windows = p.dataset.test_windows;

  NoGradGuard guard;
  const Tensor input = windows.input(p.dataset.test, w);
  const Tensor target = windows.target(p.dataset.test, w);
  const ForwardResult r = model_forward(p.rc.model, params, input);
  const LossBreakdown loss = total_loss(r.forecast, target, r.refined, r.embedded, p.rc.train.weights);

  ensure_dir(p.rc.out_dir);
  const auto& names = p.frame.names;
  for (Component c : kComponents) {
    write_matrix(p.rc.out_dir / (std::string(component_name(c)) + ".csv"), names,
                 r.refined[static_cast<std::size_t>(c)]);
  }
  write_matrix(p.rc.out_dir / "embedding.csv", names, r.embedded);
  write_series(p.rc.out_dir / "forecast.csv", names, p.dataset.scaler.inverse(r.forecast));

  const fs::path loss_path = p.rc.out_dir / "losses.csv";
  auto f = open_out(loss_path);
  f << "window,total,mse,rec,orth,delta_scale_trend,delta_scale_seasonal,delta_scale_residual\n";
  f << w << ',' << fmt(loss.total.item()) << ',' << fmt(loss.mse) << ',' << fmt(loss.rec) << ',' << fmt(loss.orth)
    << ',' << fmt(r.delta_scale[0]) << ',' << fmt(r.delta_scale[1]) << ',' << fmt(r.delta_scale[2]) << '\n';
  finish(f, loss_path);
  out << "decomposition of test window " << w << " written to " << p.rc.out_dir.string() << '\n';
}

void cmd_synth(const CommandOptions& opts, std::ostream& out, std::ostream&) {
  data::SynthSpec spec = load_synth_spec(opts.config);
  if (opts.seed) spec.seed = *opts.seed;
  const data::SynthSeries s = data::synth_generate(spec);
  const fs::path dir = opts.out ? *opts.out : fs::path("synth");
  ensure_dir(dir);
  data::write_csv(dir / "series.csv", s.series);
  data::write_csv(dir / "trend.csv", s.trend);
  data::write_csv(dir / "seasonal.csv", s.seasonal);
  data::write_csv(dir / "noise.csv", s.noise);
  out << "wrote " << spec.N << " rows x " << spec.M << " variables to " << dir.string() << '\n';
}

int run(const std::string& command, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  auto fail = [&](int code, const std::string& msg) {
    std::string line = msg;
    for (char& c : line) {
      if (c == '\n' || c == '\r') c = ' ';
    }
    err << "ERROR " << code << ": " << line << '\n';
    return code;
  };
  try {
    if (command == "train") cmd_train(opts, out, err);
    else if (command == "evaluate") cmd_evaluate(opts, out, err);
    else if (command == "forecast") cmd_forecast(opts, out, err);
    else if (command == "decompose") cmd_decompose(opts, out, err);
    else if (command == "synth") cmd_synth(opts, out, err);
    else return fail(kConfigError, "unknown command '" + command + "'");
    return kOk;
  } catch (const data::IoError& e) {
    return fail(kIoError, e.what());
  } catch (const CheckpointError& e) {
    return fail(e.kind() == CheckpointError::Kind::Io ? kIoError : kCheckpointError, e.what());
  } catch (const ConfigError& e) {
    return fail(kConfigError, e.what());
  } catch (const data::DataError& e) {
    return fail(kDataError, e.what());
  } catch (const std::exception& e) {
    return fail(kFailure, e.what());
  }
}

}  // namespace dssm::cli
