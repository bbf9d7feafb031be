#include <iostream>

#include "CLI11.hpp"
#include "jetfault/cli.hpp"

using namespace jetfault::cli;

int main(int argc, char** argv) {
  CLI::App app{"jetfault: jet-powered humanoid flight with turbine faults"};
  app.require_subcommand(1);
  RunManifest m;
  std::uint64_t seed = 0;
  int repeats = 0;

  auto addModel = [&](CLI::App* sub) {
    sub->add_option("--model", m.model, "robot model JSON (default models/jetbot.json)");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "run a scenario N times and write telemetry, summary and plots");
  addModel(simulate);
  simulate->add_option("--scenario", m.scenario, "scenario file or name under scenarios/")->required();
  simulate->add_option("--out", m.out, "output directory (default runs/<scenario>[_refgen])");
  CLI::Option* seedOpt = simulate->add_option("--seed", seed, "base seed; repeat r uses seed + r");
  CLI::Option* repeatsOpt = simulate->add_option("--repeats", repeats, "number of repeats")->check(CLI::PositiveNumber);
  simulate->add_flag("--with-refgen", m.withRefgen, "switch to the optimized fault reference after detection");
  bool noPlots = false;
  simulate->add_flag("--no-plots", noPlots, "skip the SVG plots (envelope.csv is still written)");

  CLI::App* refgen = app.add_subcommand("refgen", "solve reference problems");
  addModel(refgen);
  auto* problemOpt = refgen->add_option("--problem", m.problem, "problem file");
  auto* scenarioOpt = refgen->add_option("--scenario", m.scenario, "solve the problems referenced by a scenario");
  problemOpt->excludes(scenarioOpt);
  refgen->add_option("--out", m.out, "output directory (default references/)");

  CLI::App* plot = app.add_subcommand("plot", "render SVG panels from telemetry CSVs");
  plot->add_option("files", m.files, "telemetry CSVs of one run set")->required();
  plot->add_option("--out", m.out, "output directory (default: directory of the first CSV)");

  CLI::App* validate = app.add_subcommand("validate", "check a model file and its dynamics");
  addModel(validate);
  validate->add_option("--samples", m.samples, "random states per check")->check(CLI::PositiveNumber);
  CLI::Option* validateSeed = validate->add_option("--seed", seed, "seed for the random states");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  if (*seedOpt || *validateSeed) m.seed = seed;
  if (*repeatsOpt) m.repeats = repeats;
  m.plots = !noPlots;

  if (simulate->parsed()) return cmdSimulate(m, std::cout);
  if (refgen->parsed()) return cmdRefGen(m, std::cout);
  if (plot->parsed()) return cmdPlot(m, std::cout);
  if (validate->parsed()) return cmdValidate(m, std::cout);
  return kUsage;
}
