#include "jetfault/fault_detection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace jetfault {

namespace {

std::atomic<int> clampWarnings{0};

double clampWithWarning(double v, double lo, double hi, const char* what) {
  if (v >= lo && v <= hi) return v;
  if (clampWarnings.fetch_add(1) < 5)
    std::cerr << "warning: " << what << " " << v << " outside [" << lo << ", " << hi << "], clamped\n";
  return std::clamp(v, lo, hi);
}

}  // namespace

double ThrustRpmMap::thrustToRpm(double thrust) const {
  const double t = clampWithWarning(thrust, 0.0, maxThrust, "thrust");
  return maxRpm * std::sqrt(t / maxThrust);
}

double ThrustRpmMap::rpmToThrust(double rpm) const {
  const double r = clampWithWarning(rpm, 0.0, maxRpm, "rpm");
  const double ratio = r / maxRpm;
  return maxThrust * ratio * ratio;
}

double quantizeRpm(double rpm, double step) { return std::floor(rpm / step) * step; }

void TurbineHealthConfig::validate() const {
  if (!(rpmThreshold > 0.0) || !(holdTime > 0.0) || !(quantizationStep > 0.0) || !(idleRpm >= 0.0))
    throw std::invalid_argument("turbine health config: thresholds and steps must be positive");
}

bool anyFault(const FaultStatus& status) {
  return std::any_of(status.begin(), status.end(),
                     [](const TurbineStatus& s) { return s.state != TurbineState::Nominal; });
}

void detectorStep(double measuredRpm, double referenceRpm, const TurbineHealthConfig& config, double dt, double time,
                  TurbineStatus& status) {
  if (std::abs(measuredRpm - referenceRpm) > config.rpmThreshold)
    status.accumulator += dt;
  else
    status.accumulator = 0.0;

  // Small slack so that n ticks of dt compare as n*dt despite summation roundoff.
  if (status.state == TurbineState::Nominal && status.accumulator > config.holdTime + 1e-9) {
    status.state = TurbineState::Fault;
    status.faultTime = time;
  }
  if (status.state == TurbineState::Fault && measuredRpm <= config.idleRpm) {
    status.state = TurbineState::Off;
    status.offTime = time;
  }
}

double TrapezoidIntegrator::update(double rate, double dt) {
  const double previous = primed_ ? lastRate_ : rate;
  value_ = std::clamp(value_ + 0.5 * dt * (previous + rate), lower_, upper_);
  lastRate_ = rate;
  primed_ = true;
  return value_;
}

void TrapezoidIntegrator::reset(double value) {
  value_ = std::clamp(value, lower_, upper_);
  primed_ = false;
  lastRate_ = 0.0;
}

double referenceRpm(const std::vector<double>& thrustRateHistory, double initialThrust, double dt,
                    const ThrustRpmMap& map) {
  TrapezoidIntegrator integral(initialThrust, 0.0, map.maxThrust);
  for (double rate : thrustRateHistory) integral.update(rate, dt);
  return map.thrustToRpm(integral.value());
}

FaultDetector::FaultDetector(std::vector<ThrustRpmMap> maps, TurbineHealthConfig config, const VectorXd& initialThrust)
    : maps_(std::move(maps)), config_(config), status_(maps_.size()) {
  config_.validate();
  if (initialThrust.size() != static_cast<Eigen::Index>(maps_.size()))
    throw std::invalid_argument("fault detector: initial thrust size mismatch");
  for (std::size_t k = 0; k < maps_.size(); ++k) commanded_.emplace_back(initialThrust[k], 0.0, maps_[k].maxThrust);
}

const FaultStatus& FaultDetector::step(double time, const VectorXd& commandedThrustRate, const VectorXd& measuredRpm,
                                       double dt) {
  const auto n = static_cast<Eigen::Index>(maps_.size());
  if (commandedThrustRate.size() != n || measuredRpm.size() != n)
    throw std::invalid_argument("fault detector: input size mismatch");
  for (Eigen::Index k = 0; k < n; ++k) {
    commanded_[k].update(commandedThrustRate[k], dt);
    const double reference = maps_[k].thrustToRpm(commanded_[k].value());
    detectorStep(quantizeRpm(measuredRpm[k], config_.quantizationStep), reference, config_, dt, time, status_[k]);
  }
  return status_;
}

VectorXd FaultDetector::referenceRpm() const {
  VectorXd out(maps_.size());
  for (std::size_t k = 0; k < maps_.size(); ++k) out[k] = maps_[k].thrustToRpm(commanded_[k].value());
  return out;
}

}  // namespace jetfault
