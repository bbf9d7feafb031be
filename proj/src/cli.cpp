#include "jetfault/cli.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "jetfault/audit.hpp"
#include "jetfault/simulator.hpp"

namespace jetfault::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string firstExisting(const std::vector<fs::path>& candidates, const std::string& fallback) {
  for (const fs::path& p : candidates)
    if (fs::is_regular_file(p)) return p.string();
  return fallback;
}

json optionalJson(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json metricsJson(const RunMetrics& m) {
  return {{"momentum_error_integral", m.momentumErrorIntegral},
          {"max_momentum_error", m.maxMomentumError},
          {"recovery_time", optionalJson(m.recoveryTime)},
          {"joint_error_bounded", m.jointErrorBounded},
          {"final_joint_error", m.finalJointError},
          {"final_position_error", m.finalPositionError},
          {"completed", m.completed}};
}

void writeJson(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<std::string> splitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// SVG.

struct Series {
  const std::vector<double>* values;
  std::string color;
  std::string label;
  bool band = false;  // filled from zero
  bool dashed = false;
};

double niceStep(double range, int ticks) {
  const double raw = range / ticks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double f : {1.0, 2.0, 5.0, 10.0})
    if (raw <= f * mag) return f * mag;
  return 10.0 * mag;
}

std::string svgPanel(const std::string& title, const std::string& ylabel, const std::vector<double>& time,
                     const std::vector<Series>& series) {
  const double w = 900, h = 320, left = 70, right = 170, top = 40, bottom = 50;
  const double pw = w - left - right, ph = h - top - bottom;
  const double t0 = time.front(), t1 = std::max(time.back(), time.front() + 1e-9);
  double ymax = 0.0;
  for (const Series& s : series)
    for (double v : *s.values)
      if (std::isfinite(v)) ymax = std::max(ymax, v);
  if (!(ymax > 0.0)) ymax = 1.0;
  const double ystep = niceStep(ymax, 5);
  ymax = std::ceil(ymax / ystep) * ystep;
  const double xstep = niceStep(t1 - t0, 8);
  auto px = [&](double t) { return left + (t - t0) / (t1 - t0) * pw; };
  auto py = [&](double v) { return top + ph - std::clamp(v, 0.0, ymax) / ymax * ph; };

  fmt::memory_buffer b;
  auto out = std::back_inserter(b);
  fmt::format_to(out,
                 "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
                 "font-family=\"sans-serif\" font-size=\"12\">\n",
                 w, h);
  fmt::format_to(out, "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", w, h);
  fmt::format_to(out, "<text x=\"{}\" y=\"22\" font-size=\"15\">{}</text>\n", left, title);
  for (double y = 0.0; y <= ymax + 1e-9 * ymax; y += ystep) {
    fmt::format_to(out, "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n", left, py(y),
                   left + pw, py(y));
    fmt::format_to(out, "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:g}</text>\n", left - 6, py(y) + 4, y);
  }
  for (double t = std::ceil(t0 / xstep) * xstep; t <= t1 + 1e-9; t += xstep) {
    fmt::format_to(out, "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#eee\"/>\n", px(t), top,
                   px(t), top + ph);
    fmt::format_to(out, "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:g}</text>\n", px(t), top + ph + 18, t);
  }
  fmt::format_to(out, "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", left, top,
                 pw, ph);
  fmt::format_to(out, "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">time [s]</text>\n", left + pw / 2,
                 h - 10);
  fmt::format_to(out, "<text transform=\"translate(18 {:.2f}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
                 top + ph / 2, ylabel);

  int legend = 0;
  for (const Series& s : series) {
    const std::vector<double>& v = *s.values;
    const std::size_t count = std::min(v.size(), time.size());
    if (count == 0) continue;
    if (s.band) {
      fmt::format_to(out, "<polygon fill=\"{}\" fill-opacity=\"0.25\" stroke=\"none\" points=\"", s.color);
      fmt::format_to(out, "{:.2f},{:.2f}", px(time[0]), py(0.0));
      for (std::size_t i = 0; i < count; ++i) fmt::format_to(out, " {:.2f},{:.2f}", px(time[i]), py(v[i]));
      fmt::format_to(out, " {:.2f},{:.2f}\"/>\n", px(time[count - 1]), py(0.0));
    } else {
      fmt::format_to(out, "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{} points=\"", s.color,
                     s.dashed ? " stroke-dasharray=\"6 4\"" : "");
      for (std::size_t i = 0; i < count; ++i)
        fmt::format_to(out, "{}{:.2f},{:.2f}", i ? " " : "", px(time[i]), py(v[i]));
      fmt::format_to(out, "\"/>\n");
    }
    const double ly = top + 14 + 18 * legend++;
    fmt::format_to(out, "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"14\" height=\"8\" fill=\"{}\"{}/>\n", left + pw + 12,
                   ly - 8, s.color, s.band ? " fill-opacity=\"0.25\"" : "");
    fmt::format_to(out, "<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", left + pw + 32, ly, s.label);
  }
  fmt::format_to(out, "</svg>\n");
  return fmt::to_string(b);
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

void writeText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void writePlots(const Envelope& e, const fs::path& dir, std::vector<std::string>& written) {
  std::vector<Series> thrusts;
  for (std::size_t k = 0; k < e.thrusterNames.size(); ++k)
    thrusts.push_back({&e.thrustMean[k], kPalette[k % 8], e.thrusterNames[k]});
  const std::vector<double> threshold(e.time.size(), kHoverMomentumThreshold);
  const std::string runs = fmt::format(" ({} run{})", e.runs, e.runs == 1 ? "" : "s");
  const std::vector<std::pair<std::string, std::string>> files = {
      {"thrusts.svg", svgPanel("Thrust intensities" + runs, "thrust [N]", e.time, thrusts)},
      {"momentum_error.svg",
       svgPanel("Momentum error norm" + runs, "|H - H*|", e.time,
                {{&e.momentumMax, "#d62728", "max", true},
                 {&e.momentumMean, "#1f77b4", "mean"},
                 {&threshold, "#555555", "hover threshold", false, true}})},
      {"joint_error.svg", svgPanel("Joint position error norm" + runs, "|s - s*| [rad]", e.time,
                                   {{&e.jointMax, "#d62728", "max", true}, {&e.jointMean, "#1f77b4", "mean"}})}};
  for (const auto& [name, text] : files) {
    writeText(dir / name, text);
    written.push_back((dir / name).string());
  }
}

void writeEnvelopeCsv(const Envelope& e, const fs::path& path) {
  fmt::memory_buffer b;
  auto out = std::back_inserter(b);
  fmt::format_to(out, "time,momentum_error_mean,momentum_error_max,joint_error_mean,joint_error_max");
  for (const std::string& n : e.thrusterNames) fmt::format_to(out, ",thrust_mean_{}", n);
  fmt::format_to(out, "\n");
  for (std::size_t i = 0; i < e.time.size(); ++i) {
    fmt::format_to(out, "{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}", e.time[i], e.momentumMean[i], e.momentumMax[i],
                   e.jointMean[i], e.jointMax[i]);
    for (const auto& t : e.thrustMean) fmt::format_to(out, ",{:.9g}", t[i]);
    fmt::format_to(out, "\n");
  }
  writeText(path, fmt::to_string(b));
}

struct RunResult {
  std::string csv;
  std::uint64_t seed = 0;
  bool aborted = false;
  std::string abortReason;
  std::optional<double> detection, off;
  RunMetrics metrics;
  std::string error;
};

}  // namespace

std::string resolveScenarioPath(const std::string& name) {
  if (name.empty()) return name;
  const std::string file = name + (fs::path(name).has_extension() ? "" : ".json");
  return firstExisting({fs::path(name), fs::path("scenarios") / file, fs::path(JETFAULT_SOURCE_DIR) / "scenarios" / file},
                       name);
}

std::string resolveModelPath(const std::string& path) {
  if (!path.empty()) return path;
  return firstExisting({fs::path("models/jetbot.json"), fs::path(JETFAULT_SOURCE_DIR) / "models/jetbot.json"},
                       "models/jetbot.json");
}

int threadCap() {
  if (const char* env = std::getenv("JETFAULT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

Envelope envelopeFromCsv(const std::vector<std::string>& files) {
  if (files.empty()) throw std::runtime_error("no telemetry files given");
  Envelope e;
  std::vector<std::string> header;
  int colTime = -1, colMomentum = -1, colJoint = -1;
  std::vector<int> colThrust;
  std::vector<double> momentumSum, jointSum;
  std::vector<std::vector<double>> thrustSum;
  std::vector<int> count;

  for (const std::string& file : files) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(file + ": empty file");
    const std::vector<std::string> h = splitCsvLine(line);
    if (header.empty()) {
      header = h;
      for (std::size_t c = 0; c < h.size(); ++c) {
        if (h[c] == "time") colTime = static_cast<int>(c);
        if (h[c] == "momentum_error") colMomentum = static_cast<int>(c);
        if (h[c] == "joint_error") colJoint = static_cast<int>(c);
        if (h[c].rfind("thrust_", 0) == 0 && h[c].rfind("thrust_cmd_", 0) != 0) {
          colThrust.push_back(static_cast<int>(c));
          e.thrusterNames.push_back(h[c].substr(7));
        }
      }
      if (colTime != 0 || colMomentum < 0 || colJoint < 0 || colThrust.empty())
        throw std::runtime_error(file + ": not a telemetry CSV (need time, thrust_*, momentum_error, joint_error)");
      thrustSum.resize(colThrust.size());
    } else if (h != header) {
      throw std::runtime_error(file + ": column header differs from " + files.front());
    }

    std::size_t row = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const std::vector<std::string> cells = splitCsvLine(line);
      if (cells.size() != header.size())
        throw std::runtime_error(fmt::format("{}: row {} has {} cells, expected {}", file, row + 2, cells.size(),
                                             header.size()));
      auto value = [&](int c) { return std::strtod(cells[c].c_str(), nullptr); };
      const double t = value(colTime);
      if (row == e.time.size()) {
        e.time.push_back(t);
        momentumSum.push_back(0.0);
        jointSum.push_back(0.0);
        e.momentumMax.push_back(0.0);
        e.jointMax.push_back(0.0);
        count.push_back(0);
        for (auto& s : thrustSum) s.push_back(0.0);
      } else if (std::abs(e.time[row] - t) > 1e-9) {
        throw std::runtime_error(fmt::format("{}: time column differs from the first run at row {}", file, row + 2));
      }
      const double me = value(colMomentum), je = value(colJoint);
      momentumSum[row] += me;
      jointSum[row] += je;
      e.momentumMax[row] = count[row] ? std::max(e.momentumMax[row], me) : me;
      e.jointMax[row] = count[row] ? std::max(e.jointMax[row], je) : je;
      for (std::size_t k = 0; k < colThrust.size(); ++k) thrustSum[k][row] += value(colThrust[k]);
      ++count[row];
      ++row;
    }
    if (row == 0) throw std::runtime_error(file + ": no data rows");
  }

  e.runs = static_cast<int>(files.size());
  const std::size_t n = e.time.size();
  e.momentumMean.resize(n);
  e.jointMean.resize(n);
  e.thrustMean.assign(thrustSum.size(), std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    e.momentumMean[i] = momentumSum[i] / count[i];
    e.jointMean[i] = jointSum[i] / count[i];
    for (std::size_t k = 0; k < thrustSum.size(); ++k) e.thrustMean[k][i] = thrustSum[k][i] / count[i];
  }
  return e;
}

int cmdPlot(const RunManifest& m, std::ostream& log) {
  Envelope e;
  try {
    e = envelopeFromCsv(m.files);
  } catch (const std::exception& ex) {
    log << "plot: " << ex.what() << '\n';
    return kUsage;
  }
  const fs::path dir = m.out.empty() ? fs::path(m.files.front()).parent_path() : fs::path(m.out);
  std::vector<std::string> written;
  try {
    if (!dir.empty()) fs::create_directories(dir);
    writeEnvelopeCsv(e, dir / "envelope.csv");
    written.push_back((dir / "envelope.csv").string());
    writePlots(e, dir, written);
  } catch (const std::exception& ex) {
    log << "plot: " << ex.what() << '\n';
    return kUsage;
  }
  for (const std::string& w : written) log << "wrote " << w << '\n';
  return kOk;
}

int cmdSimulate(const RunManifest& m, std::ostream& log) {
  std::optional<RobotModel> model;
  ScenarioSpec spec;
  RunOptions base;
  try {
    model = loadModel(resolveModelPath(m.model));
    if (m.scenario.empty()) throw std::runtime_error("--scenario is required");
    spec = loadScenario(resolveScenarioPath(m.scenario), *model);
    if (m.seed) spec.seed = *m.seed;
    if (m.repeats) spec.repeats = *m.repeats;
    if (spec.repeats < 1) throw std::runtime_error("--repeats must be >= 1");
    base.nominal = resolveReference(spec.nominalReference, *model);
    if (m.withRefgen) {
      if (spec.faultReference.empty())
        log << "note: scenario has no fault reference; --with-refgen has no effect\n";
      else
        base.fault = resolveReference(spec.faultReference, *model);
    }
  } catch (const std::exception& ex) {
    log << "simulate: " << ex.what() << '\n';
    return kUsage;
  }

  const fs::path dir = m.out.empty() ? fs::path("runs") / (spec.name + (m.withRefgen ? "_refgen" : "")) : fs::path(m.out);
  try {
    fs::create_directories(dir);
  } catch (const std::exception& ex) {
    log << "simulate: " << ex.what() << '\n';
    return kUsage;
  }

  const int repeats = spec.repeats;
  std::vector<RunResult> results(repeats);
  std::atomic<int> next{0};
  std::mutex logMutex;
  auto worker = [&] {
    for (int r = next++; r < repeats; r = next++) {
      RunResult& res = results[r];
      res.seed = spec.seed + static_cast<std::uint64_t>(r);
      res.csv = fmt::format("run_{:03d}.csv", r);
      try {
        RunOptions o = base;
        o.seed = res.seed;
        const TelemetryLog tl = runScenario(*model, spec, o);
        {
          std::ofstream out(dir / res.csv, std::ios::binary);
          if (!out) throw std::runtime_error("cannot write " + (dir / res.csv).string());
          writeTelemetryCsv(*model, tl, out);
        }
        res.aborted = tl.aborted;
        res.abortReason = tl.abortReason;
        res.detection = tl.detectionTime;
        res.off = tl.offTime;
        res.metrics = evaluateRun(tl, kHoverMomentumThreshold);
        json side = tl.header;
        side["repeat"] = r;
        side["detection_time"] = optionalJson(tl.detectionTime);
        side["off_time"] = optionalJson(tl.offTime);
        side["metrics"] = metricsJson(res.metrics);
        writeJson(dir / fmt::format("run_{:03d}.json", r), side);
      } catch (const std::exception& ex) {
        res.error = ex.what();
      }
      std::lock_guard<std::mutex> lock(logMutex);
      log << fmt::format("run {:3d} seed {}: ", r, res.seed)
          << (!res.error.empty() ? "error: " + res.error
              : res.aborted     ? "aborted: " + res.abortReason
                                : fmt::format("integral {:.3f} max {:.3f}", res.metrics.momentumErrorIntegral,
                                              res.metrics.maxMomentumError))
          << '\n';
    }
  };
  const int threads = std::min(threadCap(), repeats);
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  json runs = json::array();
  bool failed = false;
  double integralSum = 0.0;
  std::optional<double> worstRecovery;
  bool allRecovered = true, allCompleted = true, allBounded = true;
  std::vector<std::string> csvs;
  for (const RunResult& r : results) {
    const bool bad = !r.error.empty() || r.aborted;
    failed = failed || bad;
    json j = {{"file", r.csv}, {"seed", r.seed}, {"aborted", r.aborted || !r.error.empty()}};
    if (bad) j["abort_reason"] = r.error.empty() ? r.abortReason : r.error;
    if (r.error.empty()) {
      csvs.push_back((dir / r.csv).string());
      j["detection_time"] = optionalJson(r.detection);
      j["off_time"] = optionalJson(r.off);
      j["metrics"] = metricsJson(r.metrics);
    }
    runs.push_back(j);
    integralSum += r.metrics.momentumErrorIntegral;
    allCompleted = allCompleted && r.metrics.completed;
    allBounded = allBounded && r.metrics.jointErrorBounded;
    if (r.detection) {
      allRecovered = allRecovered && r.metrics.recoveryTime.has_value();
      if (r.metrics.recoveryTime) worstRecovery = std::max(worstRecovery.value_or(0.0), *r.metrics.recoveryTime);
    }
  }
  const json summary = {
      {"format", "jetfault-summary/1"},
      {"scenario", spec.name},
      {"model", model->name()},
      {"model_sha256", modelHash(*model)},
      {"seed", spec.seed},
      {"repeats", repeats},
      {"with_refgen", base.fault.has_value()},
      {"hover_threshold", kHoverMomentumThreshold},
      {"runs", runs},
      {"aggregate",
       {{"mean_momentum_error_integral", integralSum / repeats},
        {"max_recovery_time", optionalJson(worstRecovery)},
        {"all_recovered", allRecovered},
        {"all_completed", allCompleted},
        {"all_joint_error_bounded", allBounded}}},
      {"envelope", "envelope.csv"}};
  try {
    writeJson(dir / "summary.json", summary);
  } catch (const std::exception& ex) {
    log << "simulate: " << ex.what() << '\n';
    return kUsage;
  }
  log << "wrote " << (dir / "summary.json").string() << '\n';

  if (!csvs.empty()) {
    RunManifest pm;
    pm.files = csvs;
    pm.out = dir.string();
    if (m.plots) {
      if (cmdPlot(pm, log) != kOk) failed = true;
    } else {
      writeEnvelopeCsv(envelopeFromCsv(csvs), dir / "envelope.csv");
    }
  }
  if (failed) log << "simulate: at least one run aborted\n";
  return failed ? kFailed : kOk;
}

int cmdRefGen(const RunManifest& m, std::ostream& log) {
  std::optional<RobotModel> model;
  std::vector<std::pair<std::string, std::string>> jobs;  // (label, problem path)
  try {
    model = loadModel(resolveModelPath(m.model));
    if (!m.problem.empty()) {
      jobs.emplace_back(fs::path(m.problem).stem().string(), m.problem);
    } else if (!m.scenario.empty()) {
      const ScenarioSpec s = loadScenario(resolveScenarioPath(m.scenario), *model);
      jobs.emplace_back("nominal", s.nominalReference);
      if (!s.faultReference.empty()) jobs.emplace_back("fault", s.faultReference);
    } else {
      throw std::runtime_error("--problem or --scenario is required");
    }
  } catch (const std::exception& ex) {
    log << "refgen: " << ex.what() << '\n';
    return kUsage;
  }
  const fs::path dir = m.out.empty() ? fs::path("references") : fs::path(m.out);
  int code = kOk;
  try {
    fs::create_directories(dir);
    for (const auto& [label, path] : jobs) {
      const ReferenceProblem problem = loadProblem(path, *model);
      const ReferenceSolution sol = solveReferenceProblem(*model, problem);
      json out = referenceSetToJson(*model, toReferenceSet(*model, sol.x));
      out["problem"] = fs::path(path).filename().string();
      json report = reportToJson(sol.report);
      report["problem"] = out["problem"];
      writeJson(dir / (label + "_reference.json"), out);
      writeJson(dir / (label + "_report.json"), report);
      log << fmt::format("{}: converged {} |Ldot|^2 {:.3e} min self {:.3e} min jet {:.3e} -> {}\n", label,
                         sol.report.converged, sol.report.equilibrium, sol.report.minSelfCollision,
                         sol.report.minJetCollision, (dir / (label + "_reference.json")).string());
      if (!sol.report.converged) code = kFailed;
    }
  } catch (const std::exception& ex) {
    log << "refgen: " << ex.what() << '\n';
    return kUsage;
  }
  return code;
}

int cmdValidate(const RunManifest& m, std::ostream& log) {
  const std::string path = resolveModelPath(m.model);
  std::optional<RobotModel> model;
  try {
    model = loadModel(path);
  } catch (const std::exception& ex) {
    log << "invalid model " << path << ": " << ex.what() << '\n';
    return kFailed;
  }
  log << fmt::format("model '{}': {} links, {} joints, {} thrusters, mass {:.3f} kg\n", model->name(),
                     model->numLinks(), model->numJoints(), model->numThrusters(), model->totalMass());
  const DynamicsAudit a = auditDynamics(*model, m.samples, m.seed.value_or(1));
  auto line = [&](const char* name, double value, bool ok, const char* bound) {
    log << fmt::format("  {:<32} {:>12.3e}  {}  ({})\n", name, value, ok ? "ok  " : "FAIL", bound);
  };
  log << fmt::format("oracle checks over {} random states:\n", a.samples);
  line("min eigenvalue of M", a.minMassEigenvalue, a.minMassEigenvalue > 0.0, "> 0");
  line("max |M - M^T|", a.massAsymmetry, a.massAsymmetry <= 1e-9, "<= 1e-9");
  line("||(Mdot-2C) + (Mdot-2C)^T||", a.skewResidual, a.skewResidual <= 1e-6, "<= 1e-6");
  line("thruster Jacobian vs FD", a.jacobianError, a.jacobianError <= 1e-5, "<= 1e-5");
  line("CMM vs per-link sum (rel.)", a.momentumRelativeError, a.momentumRelativeError <= 1e-9, "<= 1e-9");
  const bool ok = a.pass();
  log << (ok ? "valid\n" : "invalid\n");
  return ok ? kOk : kFailed;
}

}  // namespace jetfault::cli
