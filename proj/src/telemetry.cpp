#include <openssl/sha.h>

#include <fmt/format.h>

#include <algorithm>
#include <ostream>

#include "jetfault/simulator.hpp"

namespace jetfault {

std::vector<std::string> telemetryColumns(const RobotModel& model) {
  std::vector<std::string> c = {"time",  "base_x", "base_y", "base_z",    "roll",      "pitch",     "yaw",
                                "com_x", "com_y",  "com_z",  "com_ref_x", "com_ref_y", "com_ref_z"};
  for (const Joint& j : model.joints()) c.push_back("s_" + j.name);
  for (const char* prefix : {"thrust_", "thrust_cmd_", "rpm_", "rpm_ref_", "rpm_meas_", "state_"})
    for (const Thruster& t : model.thrusters()) c.push_back(prefix + t.name);
  for (const char* name : {"momentum_error", "linear_momentum_error", "angular_momentum_error", "joint_error", "w_linear", "w_angular", "qp_status", "qp_iterations",
                           "kkt_residual"})
    c.emplace_back(name);
  return c;
}

void writeTelemetryCsv(const RobotModel& model, const TelemetryLog& log, std::ostream& out) {
  const std::vector<std::string> columns = telemetryColumns(model);
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  fmt::memory_buffer buf;
  auto put = [&](double v) { fmt::format_to(std::back_inserter(buf), ",{:.9g}", v); };
  auto putAll = [&](const auto& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) put(v[i]);
  };
  for (const TelemetryRow& r : log.rows) {
    buf.clear();
    fmt::format_to(std::back_inserter(buf), "{:.9g}", r.time);
    putAll(r.position);
    putAll(r.rpy);
    putAll(r.com);
    putAll(r.comReference);
    putAll(r.posture);
    putAll(r.thrust);
    putAll(r.thrustCommand);
    putAll(r.rpm);
    putAll(r.rpmReference);
    putAll(r.rpmMeasured);
    for (int s : r.detectorState) fmt::format_to(std::back_inserter(buf), ",{}", s);
    put(r.momentumErrorNorm);
    put(r.linearMomentumErrorNorm);
    put(r.angularMomentumErrorNorm);
    put(r.jointErrorNorm);
    put(r.weightLinear);
    put(r.weightAngular);
    fmt::format_to(std::back_inserter(buf), ",{},{}", r.qpStatus, r.qpIterations);
    put(r.kktResidual);
    buf.push_back('\n');
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
}

std::string modelHash(const RobotModel& model) {
  const std::string text = modelToJson(model).dump();
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(text.data()), text.size(), digest);
  std::string hex;
  for (unsigned char b : digest) hex += fmt::format("{:02x}", b);
  return hex;
}

RunMetrics evaluateRun(const TelemetryLog& log, double threshold, double jointBound) {
  RunMetrics m;
  const auto& rows = log.rows;
  if (rows.empty()) return m;
  for (std::size_t i = 1; i < rows.size(); ++i)
    m.momentumErrorIntegral +=
        0.5 * (rows[i].momentumErrorNorm + rows[i - 1].momentumErrorNorm) * (rows[i].time - rows[i - 1].time);
  for (const TelemetryRow& r : rows) m.maxMomentumError = std::max(m.maxMomentumError, r.momentumErrorNorm);

  const double end = rows.back().time;
  const double duration = log.header.value("duration", end);
  m.completed = !log.aborted && end >= duration - 1e-9;

  if (log.detectionTime) {
    const double td = *log.detectionTime;
    // Scan backwards: `calm` is the start of the trailing run of rows below threshold.
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].time < td - 1e-9) continue;
      bool below = true;
      for (std::size_t k = i; k < rows.size() && rows[k].time <= rows[i].time + 1.0 + 1e-9; ++k)
        if (rows[k].momentumErrorNorm >= threshold) {
          below = false;
          break;
        }
      if (below) {
        m.recoveryTime = rows[i].time - td;
        break;
      }
    }
  }

  // Joint error over the final 10 s, sampled once per second.
  std::vector<double> samples;
  double maxJoint = 0.0;
  double nextSample = end - 10.0;
  for (const TelemetryRow& r : rows) {
    if (r.time < end - 10.0 - 1e-9) continue;
    maxJoint = std::max(maxJoint, r.jointErrorNorm);
    if (r.time >= nextSample - 1e-9) {
      samples.push_back(r.jointErrorNorm);
      nextSample += 1.0;
    }
  }
  bool monotone = samples.size() > 1 && samples.back() > samples.front() + 1e-3;
  for (std::size_t i = 1; i < samples.size() && monotone; ++i) monotone = samples[i] >= samples[i - 1];
  m.jointErrorBounded = maxJoint < jointBound && !monotone;
  m.finalJointError = rows.back().jointErrorNorm;
  m.finalPositionError = (rows.back().com - rows.back().comReference).norm();
  return m;
}

}  // namespace jetfault
