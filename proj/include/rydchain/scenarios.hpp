#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rydchain/detection.hpp"
#include "rydchain/model.hpp"
#include "rydchain/obe.hpp"
#include "rydchain/table.hpp"
#include "rydchain/xy_dynamics.hpp"

namespace rydchain {

struct TauGrid {
  double start = 0.0;
  double stop = 10.0;
  double step = 0.05;

  /// start, start + step, ... up to stop inclusive (within step / 1000).
  std::vector<double> values() const;
};

/// How to build ε(t) for a scenario.
struct EpsilonSpec {
  EpsilonModel::Backend backend = EpsilonModel::Backend::table;
  /// Inline table; used when `path` is unset. Empty means the built-in
  /// 50 µK calibration.
  std::vector<double> times;
  std::vector<double> values;
  std::optional<std::filesystem::path> path;
  EpsilonModel::TableQuantity quantity = EpsilonModel::TableQuantity::epsilon;
  std::vector<double> coefficients;  // polynomial backend
  double t_min = 0.0;
  double t_max = 10.0;
  /// Recapture backend: trap depth in µK. Zero means calibrate it so that
  /// ε(calibration_time) = calibration_target at calibration_temperature.
  double trap_depth = 0.0;
  double calibration_temperature = 50.0;
  double calibration_time = 7.0;
  double calibration_target = 0.20;
  double floor = 0.01;
  std::size_t n_mc = 20000;
  std::uint64_t seed = 7;

  /// Builds the model for atoms at the temperature in `params`.
  EpsilonModel build(const PhysicalParams& params) const;
};

/// Built-in ε(t) at 50 µK: 1% at t = 0 rising to 20% at 7 µs.
const std::vector<double>& default_epsilon_times();
const std::vector<double>& default_epsilon_values();

struct ScenarioOptions {
  PhysicalParams params;
  /// Instantaneous perfect pulses, no damping, T = 0 and ε = 0.
  bool ideal = false;
  RangeMode range_mode = RangeMode::full;
  /// Unset means the scenario default.
  std::optional<TauGrid> tau;

  double distance = 30.0;  // two-atom separation, µm
  std::vector<double> distances{20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0};
  std::size_t n_atoms = 20;  // long chain
  double spacing = 20.0;     // chains, µm
  double theta = 0.0;        // chain angle to the quantization axis, rad

  std::size_t n_realizations = 100;
  std::uint64_t seed = 1;
  std::size_t workers = 1;

  EpsilonSpec epsilon;
  bool with_detection = true;

  /// Relative rms error of the true distances in distance-scan trials.
  double distance_noise = 0.0;
  std::size_t noise_trials = 200;

  /// π-pulse durations in µs; zero means 1 / (2 Ω).
  double optical_pi = 0.0;
  double microwave_pi = 0.0;
  double step_fraction = 0.02;

  double low_temperature = 10.0;  // µK, ablation variant
  double envelope_window = 1.0;   // µs
  double ablation_time = 6.0;     // µs
  double low_temperature_time = 5.0;
  double long_chain_dt = 0.0;  // µs; zero picks a step per realization

  std::size_t calibration_degree = 2;
  TauGrid calibration_grid{0.0, 10.0, 0.25};

  double optical_pi_duration() const;
  double microwave_pi_duration() const;
};

struct ScenarioResult {
  std::string scenario;
  std::vector<TimeSeriesTable> tables;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  std::vector<std::string> warnings;

  const TimeSeriesTable& table(const std::string& name) const;
};

struct ScenarioInfo {
  std::string name;
  std::string anchor;  // figure the scenario reproduces
  std::string description;
  std::vector<std::string> parameters;  // option keys the scenario reads
};

/// Sorted by name.
const std::vector<ScenarioInfo>& scenario_catalog();
const ScenarioInfo& scenario_info(const std::string& name);

ScenarioResult run_scenario(const std::string& name, const ScenarioOptions& options);

ScenarioResult two_atom_exchange(const ScenarioOptions& options);
ScenarioResult distance_scan(const ScenarioOptions& options);
ScenarioResult three_chain(const ScenarioOptions& options);
ScenarioResult temperature_ablation(const ScenarioOptions& options);
ScenarioResult long_chain(const ScenarioOptions& options);
ScenarioResult calibrate_epsilon(const ScenarioOptions& options);

/// Preparation and readout pulses of the experimental sequence for N atoms:
/// address atom 0, excite the others and move them to ↓ with a microwave π
/// pulse, then excite atom 0. Readout is one de-excitation π pulse.
std::vector<PulseSegment> preparation_pulses(std::size_t n_atoms, const ScenarioOptions& options);
std::vector<PulseSegment> readout_pulses(const ScenarioOptions& options);

/// Thermal average of ground/Rydberg content at the end of the readout, one
/// column per τ and 2^N rows. Detection is not applied.
struct ReadoutEnsemble {
  EnsembleResult ensemble;
  double max_trace_deviation = 0.0;
};

ReadoutEnsemble readout_ensemble(const ChainGeometry& geometry, const PhysicalParams& params,
                                 const ScenarioOptions& options, std::span<const double> taus,
                                 std::uint64_t stream);

/// Applies the recapture channel column by column with ε evaluated at the
/// total sequence length prep + τ + readout.
Eigen::MatrixXd apply_detection(const Eigen::MatrixXd& readout, std::size_t n_atoms, std::span<const double> taus,
                                double overhead, const EpsilonModel& epsilon);

/// Pattern labels "00..0" to "11..1" in basis order.
std::vector<std::string> pattern_labels(std::size_t n_atoms);

}  // namespace rydchain
