// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <fmt/format.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unistd.h>

#include "bound_rollout.hpp"
#include "jetfault/audit.hpp"
#include "jetfault/cli.hpp"
#include "jetfault/simulator.hpp"
#include "qp_oracle.hpp"
#include "test_support.hpp"

using namespace jetfault;
using jetfault::testing::jetbot;
using jetfault::testing::sourcePath;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point since) { return std::chrono::duration<double>(Clock::now() - since).count(); }

struct Line {
  int id;
  bool pass;
  std::string text;
};

Line dynamicsOracles() {
  const auto t0 = Clock::now();
  const DynamicsAudit a = auditDynamics(jetbot(), 1000, 2024);
  const double wall = seconds(t0);
  const bool ok = a.minMassEigenvalue > 0.0 && a.massAsymmetry <= 1e-9 && a.skewResidual <= 1e-6 &&
                  a.jacobianError <= 1e-5 && a.momentumRelativeError <= 1e-9 && wall <= 30.0;
  return {1, ok,
          fmt::format("dynamics oracles, 1000 states: min eig(M) {:.3e} > 0, skew {:.2e} <= 1e-6, jacobian FD {:.2e} "
                      "<= 1e-5, CMM rel {:.2e} <= 1e-9, {:.1f} s <= 30 s",
                      a.minMassEigenvalue, a.skewResidual, a.jacobianError, a.momentumRelativeError, wall)};
}

Line boundForcing() {
  std::mt19937 rng(77);
  double worst = 0.0;
  bool monotone = true, reentered = true;
  for (int set = 0; set < 100; ++set) {
    const IntegralBoundSet b = jetfault::testing::randomIntegralBoundSet(rng, 1 + set % 8);
    const auto inside = jetfault::testing::checkBoundForcing(rng, b, false);
    const auto outside = jetfault::testing::checkBoundForcing(rng, b, true);
    worst = std::max(worst, inside.worstExcess);
    monotone = monotone && outside.monotoneReentry;
    reentered = reentered && outside.reentered;
  }
  const bool ok = worst <= 1e-12 && monotone && reentered;
  return {2, ok,
          fmt::format("tanh bound forcing, 100 bound sets: excess beyond one-step overshoot {:.1e}, re-entry from 10% "
                      "outside monotone={} complete={}",
                      worst, monotone, reentered)};
}

Line qpCorrectness() {
  const auto t0 = Clock::now();
  std::mt19937 rng(5);
  double worstObjective = 0.0, worstKkt = 0.0;
  bool converged = true;
  for (int trial = 0; trial < 500; ++trial) {
    const int d = 1 + trial % 10;
    const BoxQP qp = jetfault::testing::randomBoxQP(rng, d);
    const QpResult r = solveBoxQP(qp);
    converged = converged && r.converged();
    const double fo = qp.objective(jetfault::testing::bruteForceBoxQP(qp));
    worstObjective = std::max(worstObjective, std::abs(qp.objective(r.solution) - fo) / std::max(1.0, std::abs(fo)));
    worstKkt = std::max(worstKkt, r.kktResidual);
  }
  const double wall = seconds(t0);
  const bool ok = converged && worstObjective <= 1e-8 && worstKkt <= 1e-8 && wall <= 60.0;
  return {3, ok,
          fmt::format("box QP vs 3^d enumeration, 500 problems d <= 10: objective gap {:.1e} <= 1e-8, KKT {:.1e} <= "
                      "1e-8, {:.1f} s <= 60 s",
                      worstObjective, worstKkt, wall)};
}

Line referenceGenerator() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"arm_fault", "back_fault"}) {
    const ReferenceProblem p = loadProblem(sourcePath(std::string("problems/") + name + ".json"), jetbot());
    ReferenceProblem feasibility = p;
    feasibility.manipulabilityWeight = 0.0;
    auto t0 = Clock::now();
    const ReferenceSolution full = solveReferenceProblem(jetbot(), p);
    const double wall = seconds(t0);
    const ReferenceSolution base = solveReferenceProblem(jetbot(), feasibility);
    int faulty = 0;
    while (!p.faulty[faulty]) ++faulty;
    const double thrust = variableThrusts(jetbot(), full.x)[faulty];
    const double detFull = manipulabilityDeterminant(jetbot(), p, full.x);
    const double detBase = manipulabilityDeterminant(jetbot(), p, base.x);
    const ReferenceReport& r = full.report;
    const bool pass = r.converged && base.report.converged && r.equilibrium <= 1e-6 &&
                      r.minSelfCollision >= -1e-9 && r.minJetCollision >= -1e-9 && thrust == 0.0 &&
                      detFull >= detBase && wall <= 120.0;
    ok = ok && pass;
    detail += fmt::format("; {}: |Ldot|^2 {:.1e}, min h {:.1e}, T_fault {}, det {:.3e} >= {:.3e}, {:.1f} s", name,
                          r.equilibrium, std::min(r.minSelfCollision, r.minJetCollision), thrust, detFull, detBase,
                          wall);
  }
  return {5, ok, "reference generator" + detail};
}

struct ScenarioStats {
  std::vector<TelemetryLog> logs;
  std::vector<RunMetrics> metrics;
  double maxWall = 0.0;
};

ScenarioStats runRepeats(const std::string& name, bool refgen) {
  const ScenarioSpec s = loadScenario(sourcePath("scenarios/" + name + ".json"), jetbot());
  RunOptions o;
  o.nominal = resolveReference(s.nominalReference, jetbot());
  if (refgen) o.fault = resolveReference(s.faultReference, jetbot());
  ScenarioStats st;
  for (int r = 0; r < s.repeats; ++r) {
    o.seed = s.seed + static_cast<std::uint64_t>(r);
    const auto t0 = Clock::now();
    st.logs.push_back(runScenario(jetbot(), s, o));
    st.maxWall = std::max(st.maxWall, seconds(t0));
    st.metrics.push_back(evaluateRun(st.logs.back(), kHoverMomentumThreshold));
  }
  return st;
}

double meanIntegral(const ScenarioStats& st) {
  double sum = 0.0;
  for (const RunMetrics& m : st.metrics) sum += m.momentumErrorIntegral;
  return sum / static_cast<double>(st.metrics.size());
}

Line detectionTiming(const std::vector<const ScenarioStats*>& sets) {
  double worstDetect = 0.0, worstOff = 0.0;
  bool all = true;
  const double onset = 15.0;
  for (const ScenarioStats* st : sets)
    for (const TelemetryLog& log : st->logs) {
      if (!log.detectionTime || !log.offTime) {
        all = false;
        continue;
      }
      worstDetect = std::max(worstDetect, std::abs(*log.detectionTime - (onset + 0.3)));
      worstOff = std::max(worstOff, std::abs(*log.offTime - (onset + 0.8)));
    }
  const bool ok = all && worstDetect <= 0.01 + 1e-9 && worstOff <= 0.02 + 1e-9;
  return {4, ok,
          fmt::format("fault detection, 20 step-fault runs: |t_fault - (onset + 0.3)| <= {:.3f} s (<= 0.010), "
                      "|t_off - (onset + 0.8)| <= {:.3f} s (<= 0.020)",
                      worstDetect, worstOff)};
}

Line scenarioRegression(const ScenarioStats& arm, const ScenarioStats& back, const ScenarioStats& backPlain) {
  bool ok = true;
  std::string detail;
  for (const auto& [name, st] : {std::pair<const char*, const ScenarioStats*>{"arm", &arm}, {"back", &back}}) {
    double worstRecovery = 0.0;
    bool pass = true;
    for (std::size_t i = 0; i < st->metrics.size(); ++i) {
      const RunMetrics& m = st->metrics[i];
      pass = pass && m.completed && m.jointErrorBounded && m.recoveryTime && *m.recoveryTime <= 5.0;
      worstRecovery = std::max(worstRecovery, m.recoveryTime.value_or(1e9));
    }
    pass = pass && st->maxWall <= 60.0;
    ok = ok && pass;
    detail += fmt::format("; {} fault: {} runs complete, worst recovery {:.2f} s <= 5, max wall {:.2f} s", name,
                          st->metrics.size(), worstRecovery, st->maxWall);
  }
  const double with = meanIntegral(back), without = meanIntegral(backPlain);
  bool pairwise = true;
  for (std::size_t i = 0; i < back.metrics.size(); ++i)
    pairwise = pairwise && back.metrics[i].momentumErrorIntegral < backPlain.metrics[i].momentumErrorIntegral;
  ok = ok && with < without && pairwise;
  detail += fmt::format("; back fault integral with refgen {:.2f} < without {:.2f} (every seed: {})", with, without,
                        pairwise);
  return {6, ok, "scenario regression" + detail};
}

Line determinism() {
  const fs::path dir = fs::temp_directory_path() / ("jetfault_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  bool identical = true;
  int compared = 0;
  for (const char* scenario : {"nominal", "arm_fault", "back_fault"}) {
    std::vector<std::string> outs;
    for (const char* threads : {"1", "2"}) {
      ::setenv("JETFAULT_THREADS", threads, 1);
      cli::RunManifest m;
      m.scenario = sourcePath(std::string("scenarios/") + scenario + ".json");
      m.seed = 11;
      m.repeats = 2;
      m.withRefgen = true;
      m.plots = false;
      m.out = (dir / (std::string(scenario) + "_" + threads)).string();
      std::ostringstream log;
      cli::cmdSimulate(m, log);
      outs.push_back(m.out);
    }
    ::unsetenv("JETFAULT_THREADS");
    for (const char* file : {"run_000.csv", "run_001.csv", "summary.json"}) {
      auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
      };
      const std::string a = slurp(fs::path(outs[0]) / file), b = slurp(fs::path(outs[1]) / file);
      identical = identical && !a.empty() && a == b;
      ++compared;
    }
  }
  fs::remove_all(dir);
  return {7, identical,
          fmt::format("determinism: {} output files from repeated simulate commands (seed 11, 1 vs 2 threads) "
                      "byte-identical={}",
                      compared, identical)};
}

}  // namespace

int main() {
  std::vector<Line> lines;
  auto report = [&](const Line& l) {
    std::cout << fmt::format("criterion {}: {}  {}", l.id, l.pass ? "PASS" : "FAIL", l.text) << std::endl;
    lines.push_back(l);
  };
  report(dynamicsOracles());
  report(boundForcing());
  report(qpCorrectness());
  const ScenarioStats arm = runRepeats("arm_fault", true);
  const ScenarioStats back = runRepeats("back_fault", true);
  const ScenarioStats backPlain = runRepeats("back_fault", false);
  report(detectionTiming({&arm, &back}));
  report(referenceGenerator());
  report(scenarioRegression(arm, back, backPlain));
  report(determinism());
  bool all = true;
  for (const Line& l : lines) all = all && l.pass;
  std::cout << (all ? "all criteria pass" : "some criteria FAIL") << std::endl;
  return all ? 0 : 1;
}
