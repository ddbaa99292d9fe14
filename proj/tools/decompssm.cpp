#include <iostream>

#include <CLI11.hpp>

#include "dssm/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Decomposition state-space forecaster"};
  app.require_subcommand(1);

  dssm::cli::CommandOptions opts;
  std::string config;
  std::string checkpoint;
  std::string out;
  long long window = 0;
  std::uint64_t seed = 0;
  std::size_t horizon = 0;

  struct Spec {
    const char* name;
    const char* help;
    bool checkpoint;
    bool window;
    bool horizon;
  };
  const Spec specs[] = {
      {"train", "Train a model and write the best checkpoint and metrics", false, false, false},
      {"evaluate", "Score a checkpoint on the test split", true, false, true},
      {"forecast", "Forecast from the series tail or a test window", true, true, false},
      {"decompose", "Dump the component embeddings of one test window", true, true, false},
      {"synth", "Generate a synthetic series from a spec file", false, false, false},
  };
  for (const Spec& s : specs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", config, "Config file (spec file for synth)")->required();
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--seed", seed, "Seed overriding the config");
    if (s.checkpoint) sub->add_option("--checkpoint", checkpoint, "Checkpoint file");
    if (s.window) sub->add_option("--window", window, "Test window index");
    if (s.horizon) sub->add_option("--horizon", horizon, "Forecast horizon (must match the trained head)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "ERROR " << dssm::cli::kConfigError << ": " << e.what() << '\n';
    return dssm::cli::kConfigError;
  }

  CLI::App* sub = app.get_subcommands().front();
  auto given = [sub](const char* name) {
    const CLI::Option* o = sub->get_option_no_throw(name);
    return o != nullptr && o->count() > 0;
  };
  opts.config = config;
  if (given("--checkpoint")) opts.checkpoint = checkpoint;
  if (given("--out")) opts.out = out;
  if (given("--seed")) opts.seed = seed;
  if (given("--window")) opts.window = window;
  if (given("--horizon")) opts.horizon = horizon;
  return dssm::cli::run(sub->get_name(), opts, std::cout, std::cerr);
}
