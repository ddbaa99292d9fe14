#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "dssm/commands.hpp"
#include "dssm/objective.hpp"

using namespace dssm;
using namespace dssm::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dssm_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::vector<std::vector<double>> read_matrix(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

const char* kSpec =
    "N = 220\n"
    "M = 2\n"
    "noise_std = 0.05\n"
    "seed = 4\n"
    "trend = 0.01:0, -0.005:2\n"
    "seasonal = 1:12:0, 0.3:5:1\n";

struct Workspace {
  fs::path dir;
  fs::path config;
  CommandOptions opts;
};

Workspace make_workspace(const std::string& name, const std::string& extra = "") {
  Workspace w;
  w.dir = scratch(name);
  put(w.dir / "spec.txt", kSpec);
  CommandOptions so;
  so.config = w.dir / "spec.txt";
  so.out = w.dir / "data";
  std::ostringstream out, err;
  REQUIRE(run("synth", so, out, err) == kOk);
  w.config = w.dir / "run.cfg";
  put(w.config, "# tiny run\n"
                "data_path = " + (w.dir / "data" / "series.csv").string() + "\n"
                "out_dir = " + (w.dir / "out").string() + "\n"
                "T = 16\nH = 4\nD = 8\nP = 4\nseed = 5\nbatch_size = 4\n" + extra);
  w.opts.config = w.config;
  return w;
}

}  // namespace

TEST_CASE("run config parsing") {
  const RunConfig rc = parse_run_config(
      "data_path = x.csv  # trailing comment\n"
      "\n"
      "T = 32\nH = 8\nD = 16\nP = 4\nlr = 0.002\nlambda_orth = 0\nvariant = no_gcrm\n"
      "split_train_end = 100\nsplit_val_end = 150\nmissing_policy = error\nscan = sequential\n"
      "delta_min_trend = 0.001\n");
  CHECK(rc.data_path == "x.csv");
  CHECK(rc.model.T == 32);
  CHECK(rc.windows.T == 32);
  CHECK(rc.windows.H == 8);
  CHECK(rc.train.adam.lr == 0.002);
  CHECK(rc.train.weights.lambda_orth == 0.0);
  CHECK(rc.train.weights.lambda_rec == 0.1);
  CHECK_FALSE(rc.model.use_gcrm);
  CHECK(*rc.split_val_end == 150);
  CHECK(rc.missing == data::MissingPolicy::Error);
  CHECK(rc.model.scan == ssm::ScanAlgo::Sequential);
  CHECK(rc.model.bands[0].min == 0.001);
  CHECK(rc.train.epochs == 10);

  const RunConfig ad = parse_run_config("variant = no_adl\n");
  CHECK(ad.train.weights.lambda_rec == 0.0);
  CHECK(ad.train.weights.lambda_orth == 0.0);
  CHECK_FALSE(parse_run_config("variant = no_gtssm\n").model.use_gtssm);
}

TEST_CASE("run config errors name the offending key") {
  CHECK_THROWS_WITH_AS(parse_run_config("epoch = 3\n"), doctest::Contains("'epoch'"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config("T = 3\nT = 4\n"), doctest::Contains("'T'"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config("lr = fast\n"), doctest::Contains("'lr'"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config("D = 0\n"), doctest::Contains("'D'"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config("P = 3\n"), doctest::Contains("P must be even"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config("variant = tiny\n"), doctest::Contains("'variant'"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("just words\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("split_train_end = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("split_train = 0.5\nsplit_val = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("delta_min_trend = 0.5\ndelta_max_trend = 0.1\n"), ConfigError);
}

TEST_CASE("synth spec parsing") {
  const auto spec = parse_synth_spec("N = 10\nM = 3\ntrend = 1:2:0.5\nseasonal = 1:24:0\nseasonal.2 = 2:7:0.5, 1:3:0\n");
  CHECK(spec.trend.size() == 3);
  CHECK(spec.trend[1].quad == 0.5);
  CHECK(spec.seasonal[0].size() == 1);
  CHECK(spec.seasonal[2].size() == 2);
  CHECK(spec.seasonal[2][0].period == 7.0);
  CHECK_THROWS_WITH_AS(parse_synth_spec("N = 10\nM = 1\ncolour = red\n"), doctest::Contains("'colour'"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_synth_spec("N = 10\nM = 1\nseasonal = 1:1:0\n"), doctest::Contains("period"),
                       ConfigError);
  CHECK_THROWS_AS(parse_synth_spec("N = 10\nM = 2\nseasonal.5 = 1:3:0\n"), ConfigError);
  CHECK_THROWS_AS(parse_synth_spec("N = 10\nM = 2\ntrend = 1:0, 1:0, 1:0\n"), ConfigError);
}

TEST_CASE("synth command output") {
  const fs::path dir = scratch("synth");
  put(dir / "spec.txt", "N = 64\nM = 2\nseed = 3\ntrend = 0.5:1\nseasonal = 2:8:0.3\n");
  CommandOptions o;
  o.config = dir / "spec.txt";
  o.out = dir / "a";
  std::ostringstream out, err;
  REQUIRE(run("synth", o, out, err) == kOk);
  o.out = dir / "b";
  REQUIRE(run("synth", o, out, err) == kOk);
  for (const char* f : {"series.csv", "trend.csv", "seasonal.csv", "noise.csv"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  // Zero noise: the component files add up to the series file at printed precision.
  const auto s = data::load_csv(dir / "a" / "series.csv");
  const auto t = data::load_csv(dir / "a" / "trend.csv");
  const auto q = data::load_csv(dir / "a" / "seasonal.csv");
  for (std::size_t i = 0; i < s.values.size(); ++i) CHECK(s.values[i] == t.values[i] + q.values[i]);

  put(dir / "bad.txt", "N = 64\nM = 1\nseasonal = 1:1:0\n");
  o.config = dir / "bad.txt";
  std::ostringstream e2;
  CHECK(run("synth", o, out, e2) == kConfigError);
  CHECK(e2.str().rfind("ERROR 3: ", 0) == 0);
}

TEST_CASE("train, evaluate, decompose and forecast end to end") {
  Workspace w = make_workspace("e2e");
  std::ostringstream out, err;
  REQUIRE(run("train", w.opts, out, err) == kOk);
  const fs::path od = w.dir / "out";
  CHECK(fs::exists(od / "checkpoint.bin"));
  const std::string metrics = slurp(od / "metrics.csv");
  CHECK(metrics.rfind("epoch,train_loss,val_mse,val_mae\n", 0) == 0);
  CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 11);  // header + default 10 epochs

  // Rerun with the same seed: byte-identical metrics.
  CommandOptions again = w.opts;
  again.out = w.dir / "out2";
  std::ostringstream out2, err2;
  REQUIRE(run("train", again, out2, err2) == kOk);
  CHECK(slurp(w.dir / "out2" / "metrics.csv") == metrics);
  CHECK(slurp(w.dir / "out2" / "checkpoint.bin") == slurp(od / "checkpoint.bin"));

  // Evaluate reproduces the reported test metrics exactly.
  std::ostringstream eout, eerr;
  REQUIRE(run("evaluate", w.opts, eout, eerr) == kOk);
  const std::string test_line = slurp(od / "test_metrics.csv");
  CHECK(slurp(od / "eval_metrics.csv") == test_line);
  CHECK(out.str().find(eout.str()) != std::string::npos);

  CommandOptions h = w.opts;
  h.horizon = 8;
  std::ostringstream hout, herr;
  CHECK(run("evaluate", h, hout, herr) == kConfigError);
  CHECK(herr.str().find("horizon") != std::string::npos);

  // Decompose: shapes, determinism and offline rescoring of the reconstruction loss.
  CommandOptions d = w.opts;
  d.window = 3;
  d.out = w.dir / "dec1";
  d.checkpoint = od / "checkpoint.bin";
  std::ostringstream dout, derr;
  REQUIRE(run("decompose", d, dout, derr) == kOk);
  d.out = w.dir / "dec2";
  REQUIRE(run("decompose", d, dout, derr) == kOk);
  for (const char* f : {"trend.csv", "seasonal.csv", "residual.csv", "embedding.csv", "forecast.csv", "losses.csv"}) {
    CHECK(slurp(w.dir / "dec1" / f) == slurp(w.dir / "dec2" / f));
  }
  const auto tr = read_matrix(w.dir / "dec1" / "trend.csv");
  const auto se = read_matrix(w.dir / "dec1" / "seasonal.csv");
  const auto re = read_matrix(w.dir / "dec1" / "residual.csv");
  const auto xe = read_matrix(w.dir / "dec1" / "embedding.csv");
  REQUIRE(tr.size() == 2);
  REQUIRE(tr[0].size() == 8);
  double acc = 0.0;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      const double r = tr[i][j] + se[i][j] + re[i][j] - xe[i][j];
      acc += r * r;
    }
  const auto losses = read_matrix(w.dir / "dec1" / "losses.csv");
  CHECK(acc / 16.0 == doctest::Approx(losses[0][2]).epsilon(1e-12));

  d.window = 100000;
  std::ostringstream rout, rerr;
  CHECK(run("decompose", d, rout, rerr) == kDataError);
  CHECK(rerr.str().find("valid test windows are 0..") != std::string::npos);

  CommandOptions f = w.opts;
  f.out = w.dir / "fc";
  f.checkpoint = od / "checkpoint.bin";
  std::ostringstream fout, ferr;
  REQUIRE(run("forecast", f, fout, ferr) == kOk);
  CHECK(data::load_csv(w.dir / "fc" / "forecast.csv").length() == 4);
}

TEST_CASE("command failures map to exit codes") {
  std::ostringstream out, err;
  CommandOptions o;
  o.config = "/nonexistent/run.cfg";
  CHECK(run("train", o, out, err) == kIoError);
  CHECK(err.str().find("/nonexistent/run.cfg") != std::string::npos);

  const fs::path dir = scratch("codes");
  put(dir / "missing_data.cfg", "data_path = /nonexistent/series.csv\nT = 8\nH = 2\nD = 4\nP = 2\n");
  o.config = dir / "missing_data.cfg";
  std::ostringstream e2;
  CHECK(run("train", o, out, e2) == kIoError);
  const std::string msg = e2.str();
  CHECK(msg.rfind("ERROR 2: ", 0) == 0);
  CHECK(msg.find("/nonexistent/series.csv") != std::string::npos);
  CHECK(std::count(msg.begin(), msg.end(), '\n') == 1);

  std::ostringstream e3;
  CHECK(run("dance", o, out, e3) == kConfigError);
}

TEST_CASE("checkpoint from another configuration is rejected by name") {
  Workspace w = make_workspace("mismatch", "epochs = 1\n");
  std::ostringstream out, err;
  REQUIRE(run("train", w.opts, out, err) == kOk);
  put(w.dir / "wide.cfg", slurp(w.config) + "");
  std::string text = slurp(w.config);
  text.replace(text.find("D = 8"), 5, "D = 10");
  put(w.dir / "wide.cfg", text);
  CommandOptions o = w.opts;
  o.config = w.dir / "wide.cfg";
  o.checkpoint = w.dir / "out" / "checkpoint.bin";
  std::ostringstream e;
  CHECK(run("evaluate", o, out, e) == kCheckpointError);
  CHECK(e.str().find("embed.W") != std::string::npos);
}

TEST_CASE("an untrained zero-head checkpoint scores as the window-mean predictor") {
  Workspace w = make_workspace("zero_head", "epochs = 1\nlr = 0\n");
  std::ostringstream out, err;
  REQUIRE(run("train", w.opts, out, err) == kOk);
  const RunConfig rc = load_run_config(w.config);
  const auto frame = data::load_csv(rc.data_path);
  DatasetOptions opt = rc.windows;
  const Dataset ds = prepare_dataset(data::chrono_split(frame, rc.ratios), opt);
  MetricsAccumulator acc;
  for (std::size_t i = 0; i < ds.test_windows.size(); ++i) {
    const Tensor x = ds.test_windows.input(ds.test, i);
    const Tensor y = ds.test_windows.target(ds.test, i);
    const Tensor mu = mean(x, 0, true);
    acc.add(broadcast_to(mu, y.shape()), y);
  }
  std::ostringstream eout, eerr;
  REQUIRE(run("evaluate", w.opts, eout, eerr) == kOk);
  const auto m = read_matrix(w.dir / "out" / "eval_metrics.csv");
  CHECK(m[0][1] == doctest::Approx(acc.result().mse).epsilon(1e-12));
  CHECK(m[0][2] == doctest::Approx(acc.result().mae).epsilon(1e-12));
}

TEST_CASE("the executable prints a single machine-readable error line") {
  const fs::path dir = scratch("exe");
  const std::string cmd = std::string(DSSM_CLI_PATH) + " train --config " + (dir / "absent.cfg").string() +
                          " 2> " + (dir / "err.txt").string() + " > /dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 2);
  CHECK(slurp(dir / "err.txt").rfind("ERROR 2: ", 0) == 0);
}
