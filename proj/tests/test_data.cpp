#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <doctest.h>

#include "dssm/data.hpp"

using namespace dssm;
using namespace dssm::data;

namespace {

std::filesystem::path write_file(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path;
}

SeriesFrame ramp(std::size_t n, std::size_t m) {
  SeriesFrame f;
  for (std::size_t j = 0; j < m; ++j) f.names.push_back("v" + std::to_string(j));
  std::vector<double> v(n * m);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  f.values = Tensor::from({n, m}, v);
  return f;
}

}  // namespace

TEST_CASE("csv loading") {
  const auto path = write_file("dssm_ok.csv", "date,a,b\n2020-01-01,1,2\n2020-01-02,3,4\n2020-01-03,5,6\n");
  const SeriesFrame f = load_csv(path);
  CHECK(f.length() == 3);
  CHECK(f.width() == 2);
  CHECK(f.names == std::vector<std::string>{"a", "b"});
  CHECK(f.timestamps[2] == "2020-01-03");
  CHECK(f.at(2, 1) == 6.0);
}

TEST_CASE("csv missing cells are forward-filled or rejected") {
  const auto path = write_file("dssm_gap.csv", "date,a\n0,1.5\n1,NaN\n2,\n3,4\n");
  const SeriesFrame f = load_csv(path);
  CHECK(f.at(1, 0) == 1.5);
  CHECK(f.at(2, 0) == 1.5);
  CHECK(f.at(3, 0) == 4.0);
  CHECK_THROWS_AS(load_csv(path, {MissingPolicy::Error}), DataError);

  const auto lead = write_file("dssm_lead.csv", "date,a,b\n0,,1\n1,2,3\n");
  CHECK_THROWS_WITH_AS(load_csv(lead), doctest::Contains("'a'"), DataError);
  const auto empty_col = write_file("dssm_empty_col.csv", "date,a,b\n0,x,1\n1,,3\n");
  CHECK_THROWS_WITH_AS(load_csv(empty_col), doctest::Contains("'a'"), DataError);
}

TEST_CASE("csv ragged rows cite the line number") {
  std::string text = "date,a,b\n";
  for (int i = 2; i <= 16; ++i) text += std::to_string(i) + ",1,2\n";
  text += "17,1\n";
  const auto path = write_file("dssm_ragged.csv", text);
  CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("line 17"), DataError);
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), IoError);
}

TEST_CASE("csv round-trip preserves doubles exactly") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1e3);
  SeriesFrame f = ramp(50, 3);
  for (double& v : f.values.data_mut()) v = g(rng) * std::pow(10.0, std::uniform_int_distribution<int>(-12, 12)(rng));
  f.values.data_mut()[7] = 0.1;
  f.values.data_mut()[8] = -1e-300;
  const auto path = std::filesystem::temp_directory_path() / "dssm_roundtrip.csv";
  write_csv(path, f);
  const SeriesFrame back = load_csv(path);
  CHECK(back.values.to_vector() == f.values.to_vector());
  CHECK(back.names == f.names);
}

TEST_CASE("chronological split lengths") {
  Segments s = chrono_split(ramp(10, 1));
  CHECK(s.train.length() == 7);
  CHECK(s.val.length() == 1);
  CHECK(s.test.length() == 2);
  CHECK(s.val_begin == 7);
  CHECK(s.test_begin == 8);
  CHECK(s.val.at(0, 0) == 7.0);

  s = chrono_split(ramp(10, 1), {1.0, 0.0, 0.0});
  CHECK(s.train.length() == 10);
  CHECK(s.val.length() == 0);
  CHECK(s.test.length() == 0);

  s = chrono_split(ramp(100, 1));
  CHECK(s.train.length() == 70);
  CHECK(s.val.length() == 10);
  CHECK(s.test.length() == 20);
  CHECK(window_count(s.val.length(), 16, 8, 1) == 0);

  CHECK_THROWS_AS(chrono_split(ramp(10, 1), {0.5, 0.5, 0.5}), DataError);
  s = split_at(ramp(20, 2), 12, 15);
  CHECK(s.val.length() == 3);
  CHECK(s.test.at(0, 0) == 30.0);
  CHECK_THROWS_AS(split_at(ramp(20, 1), 15, 12), DataError);
}

TEST_CASE("window construction") {
  const SeriesFrame f = ramp(200, 1);
  CHECK(make_windows(f.segment(0, 192), 96, 96).size() == 1);
  CHECK(make_windows(f.segment(0, 193), 96, 96).size() == 2);
  CHECK(make_windows(f, 96, 96).size() == 9);
  const WindowSet w = make_windows(f, 10, 5, 3);
  CHECK(w.size() == (200 - 15) / 3 + 1);
  const Tensor in = w.input(f, 2), out = w.target(f, 2);
  CHECK(in.shape() == Shape{10, 1});
  CHECK(in[0] == 6.0);
  CHECK(out[0] == 16.0);
  CHECK(out.shape() == Shape{5, 1});
  CHECK_THROWS_WITH_AS(make_windows(f.segment(0, 20), 16, 8), doctest::Contains("24"), DataError);
}

TEST_CASE("window count formula and containment over random tuples") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> dn(2, 400), dt(1, 60), dh(1, 40), ds(1, 9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t T = dt(rng), H = dh(rng), stride = ds(rng);
    const std::size_t N = std::max(dn(rng), T + H);
    const WindowSet w = make_windows(ramp(N, 1), T, H, stride);
    std::size_t brute = 0;
    for (std::size_t s = 0; s + T + H <= N; s += stride) ++brute;
    CHECK(w.size() == brute);
    CHECK(w.size() == (N - T - H) / stride + 1);
    CHECK(w.starts.back() + T + H <= N);
  }
}

TEST_CASE("scaler standardises with train statistics") {
  SeriesFrame f = ramp(4, 2);  // columns [0,2,4,6] and [1,3,5,7]
  const Scaler s = Scaler::fit(f);
  CHECK(s.mean[0] == 3.0);
  CHECK(s.std[0] == doctest::Approx(std::sqrt(5.0)));
  const SeriesFrame t = s.transform(f);
  CHECK(t.at(0, 0) == doctest::Approx(-3.0 / std::sqrt(5.0)));
  const Tensor back = s.inverse(t.values);
  for (std::size_t i = 0; i < 8; ++i) CHECK(back[i] == doctest::Approx(f.values[i]));

  SeriesFrame flat;
  flat.names = {"c"};
  flat.values = Tensor::full({5, 1}, 2.0);
  CHECK(Scaler::fit(flat).std[0] == 1.0);
}

TEST_CASE("synthetic generator") {
  SynthSpec s;
  s.N = 8;
  s.M = 2;
  s.trend = {{1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  s.seasonal = {{}, {{1.0, 4.0, 0.0}}};
  const SynthSeries out = synth_generate(s);
  for (std::size_t t = 0; t < 8; ++t) CHECK(out.series.at(t, 0) == static_cast<double>(t));
  const double expect[] = {0, 1, 0, -1};
  for (std::size_t t = 0; t < 8; ++t) CHECK(std::abs(out.series.at(t, 1) - expect[t % 4]) < 1e-12);

  SynthSpec noisy = s;
  noisy.N = 300;
  noisy.noise_std = 0.3;
  noisy.seed = 9;
  noisy.trend[1].quad = 1e-3;
  const SynthSeries a = synth_generate(noisy);
  const SynthSeries b = synth_generate(noisy);
  CHECK(a.series.values.to_vector() == b.series.values.to_vector());
  for (std::size_t i = 0; i < a.series.values.size(); ++i) {
    CHECK(a.series.values[i] == (a.trend.values[i] + a.seasonal.values[i]) + a.noise.values[i]);
  }

  SynthSpec bad = s;
  bad.seasonal[1][0].period = 1.0;
  CHECK_THROWS_AS(synth_generate(bad), DataError);
  bad = s;
  bad.noise_std = -1.0;
  CHECK_THROWS_AS(synth_generate(bad), DataError);
}
