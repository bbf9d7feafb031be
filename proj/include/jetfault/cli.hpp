#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace jetfault::cli {

struct RunManifest {
  std::string model;     // empty: models/jetbot.json
  std::string scenario;  // path or name under scenarios/
  std::string problem;   // refgen only
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> repeats;
  bool withRefgen = false;
  bool plots = true;               // simulate: render SVGs after the runs
  std::vector<std::string> files;  // plot inputs
  int samples = 200;               // validate: random states per oracle
};

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailed = 1;  // a check failed or a run aborted
inline constexpr int kUsage = 2;   // bad input files or arguments

int cmdSimulate(const RunManifest& m, std::ostream& log);
int cmdRefGen(const RunManifest& m, std::ostream& log);
int cmdPlot(const RunManifest& m, std::ostream& log);
int cmdValidate(const RunManifest& m, std::ostream& log);

/// `name` as given if it is a file, else scenarios/<name>.json in the
/// working directory, else in the source tree.
std::string resolveScenarioPath(const std::string& name);
std::string resolveModelPath(const std::string& path);

/// JETFAULT_THREADS if set and positive, else the hardware concurrency.
int threadCap();

/// Per-tick statistics over a run set, as written to envelope.csv.
struct Envelope {
  std::vector<std::string> thrusterNames;
  std::vector<double> time;
  std::vector<double> momentumMean, momentumMax;
  std::vector<double> jointMean, jointMax;
  std::vector<std::vector<double>> thrustMean;  // [turbine][tick]
  int runs = 0;
};

/// Reads telemetry CSVs (identical headers required) and reduces them.
/// Throws std::runtime_error on an empty set or a schema mismatch.
Envelope envelopeFromCsv(const std::vector<std::string>& files);

}  // namespace jetfault::cli
