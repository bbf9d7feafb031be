#pragma once

#include <limits>
#include <vector>

#include "jetfault/math.hpp"
#include "jetfault/model.hpp"

namespace jetfault {

/// Static thrust <-> RPM map T = maxThrust * (rpm / maxRpm)^2.
struct ThrustRpmMap {
  double maxThrust = 1.0;
  double maxRpm = 1.0;

  static ThrustRpmMap of(const Thruster& t) { return {t.maxThrust, t.maxRpm}; }

  /// Inputs outside [0, maxThrust] are clamped (with a rate-limited warning).
  double thrustToRpm(double thrust) const;
  /// Inputs outside [0, maxRpm] are clamped (with a rate-limited warning).
  double rpmToThrust(double rpm) const;
};

/// Floor to a multiple of step (measurement quantization).
double quantizeRpm(double rpm, double step = 100.0);

struct TurbineHealthConfig {
  double rpmThreshold = 10000.0;
  double holdTime = 0.3;
  double idleRpm = 0.0;
  double quantizationStep = 100.0;

  void validate() const;  // throws std::invalid_argument
};

enum class TurbineState : int { Nominal = 0, Fault = 1, Off = 2 };

struct TurbineStatus {
  TurbineState state = TurbineState::Nominal;
  double faultTime = std::numeric_limits<double>::quiet_NaN();
  double offTime = std::numeric_limits<double>::quiet_NaN();
  double accumulator = 0.0;  // time the error has stayed above threshold
};

using FaultStatus = std::vector<TurbineStatus>;

/// True when any turbine has left Nominal.
bool anyFault(const FaultStatus& status);

/// One detector tick for a single turbine. `time` is the tick timestamp.
void detectorStep(double measuredRpm, double referenceRpm, const TurbineHealthConfig& config, double dt, double time,
                  TurbineStatus& status);

/// Trapezoidal integral of a sampled rate, clamped to [lower, upper].
class TrapezoidIntegrator {
 public:
  TrapezoidIntegrator(double initial, double lower, double upper) : value_(initial), lower_(lower), upper_(upper) {}

  double update(double rate, double dt);
  double value() const { return value_; }
  void reset(double value);

 private:
  double value_;
  double lower_;
  double upper_;
  double lastRate_ = 0.0;
  bool primed_ = false;
};

/// Reference RPM from a commanded thrust-rate history: thrustToRpm of the
/// trapezoidal integral, clamped to [0, maxThrust] before the map.
double referenceRpm(const std::vector<double>& thrustRateHistory, double initialThrust, double dt,
                    const ThrustRpmMap& map);

/// Per-turbine detectors plus the commanded-thrust integrators feeding them.
class FaultDetector {
 public:
  FaultDetector(std::vector<ThrustRpmMap> maps, TurbineHealthConfig config, const VectorXd& initialThrust);

  /// Advance one control tick. `measuredRpm` is quantized here.
  const FaultStatus& step(double time, const VectorXd& commandedThrustRate, const VectorXd& measuredRpm, double dt);

  const FaultStatus& status() const { return status_; }
  VectorXd referenceRpm() const;
  const TurbineHealthConfig& config() const { return config_; }

 private:
  std::vector<ThrustRpmMap> maps_;
  TurbineHealthConfig config_;
  std::vector<TrapezoidIntegrator> commanded_;
  FaultStatus status_;
};

}  // namespace jetfault
