#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "dssm/data.hpp"

namespace dssm::data {

void SynthSpec::validate() const {
  if (N == 0 || M == 0) throw DataError("synth: N and M must be >= 1");
  if (trend.size() != M) {
    throw DataError("synth: expected " + std::to_string(M) + " trend entries, got " + std::to_string(trend.size()));
  }
  if (seasonal.size() != M) {
    throw DataError("synth: expected " + std::to_string(M) + " seasonal lists, got " + std::to_string(seasonal.size()));
  }
  for (std::size_t m = 0; m < M; ++m) {
    for (const SeasonSpec& s : seasonal[m]) {
      if (!(s.period > 1.0)) {
        throw DataError("synth: seasonal period must be > 1 (variable " + std::to_string(m) +
                        " has " + std::to_string(s.period) + ")");
      }
    }
  }
  if (!(noise_std >= 0.0)) throw DataError("synth: noise_std must be >= 0");
}

SynthSeries synth_generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t N = spec.N, M = spec.M;
  std::vector<double> trend(N * M), seasonal(N * M), noise(N * M, 0.0), series(N * M);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t t = 0; t < N; ++t) {
    const double td = static_cast<double>(t);
    for (std::size_t m = 0; m < M; ++m) {
      const std::size_t i = t * M + m;
      const TrendSpec& tr = spec.trend[m];
      trend[i] = tr.intercept + tr.slope * td + tr.quad * td * td;
      double s = 0.0;
      for (const SeasonSpec& ss : spec.seasonal[m]) {
        s += ss.amplitude * std::sin(2.0 * std::numbers::pi * td / ss.period + ss.phase);
      }
      seasonal[i] = s;
      if (spec.noise_std > 0.0) noise[i] = spec.noise_std * gauss(rng);
      series[i] = (trend[i] + seasonal[i]) + noise[i];
    }
  }

  std::vector<std::string> names;
  for (std::size_t m = 0; m < M; ++m) names.push_back("var" + std::to_string(m));
  std::vector<std::string> stamps;
  for (std::size_t t = 0; t < N; ++t) stamps.push_back(std::to_string(t));

  auto frame = [&](std::vector<double> v) {
    SeriesFrame f;
    f.names = names;
    f.timestamps = stamps;
    f.values = Tensor::from({N, M}, std::move(v));
    return f;
  };
  return {frame(std::move(series)), frame(std::move(trend)), frame(std::move(seasonal)),
          frame(std::move(noise))};
}

}  // namespace dssm::data
