#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crgate/model.hpp"
#include "crgate/ode.hpp"
#include "crgate/optimizer.hpp"
#include "crgate/propagation.hpp"

namespace crgate::cli {

enum class AnsatzKind { Pwc, FilteredPwc, TwoCarrier, Fourier };

std::string to_string(AnsatzKind kind);

/// Pulse parametrization. Lengths in ns, amplitudes and frequencies in rad/ns
/// (the config file uses GHz).
struct AnsatzConfig {
  AnsatzKind kind = AnsatzKind::TwoCarrier;
  double duration = 27.0;
  int slices = 500;  // pwc
  double pixel = 1.0;
  double dt_fine = 0.05;
  double buffer = 4.0;
  double sigma = 0.4;
  std::optional<double> bound;
  /// Half-width of the uniform initial noise (pwc: of the random amplitudes).
  double init_range = 0.0;
  bool optimize_offsets = false;
  std::array<double, 2> offsets{0.0, 0.0};  // starting f_1, f_2
  int components = 3;                        // fourier, per control
  double omega_max = 0.0;                    // fourier
  double ramp_offset = 2.0;
  double edge_time = 0.25;
  double sample_dt = 0.05;  // fourier pulse export
};

struct SweepConfig {
  std::string selector;
  std::vector<double> durations;  // qsl
  std::string pulse_csv;          // resolved against the config directory
  std::optional<std::array<double, 2>> offsets;
  std::vector<double> eps;        // miscalibration axis values, rad/ns
  std::vector<double> t1;         // dissipation, ns
  double tp = 1e5;                // ns
  model::Levels levels{6, 6, 6};  // leakage
};

struct RunConfig {
  model::DeviceParams device;
  int control_qubit = 1;
  model::GateKind gate = model::GateKind::Cnot;
  bool local_phases = false;
  AnsatzConfig ansatz;
  optimizer::StopCriteria stop;
  propagation::GradientMode gradient_mode = propagation::GradientMode::Exact;
  ode::Tolerances ode_tol{};
  std::optional<SweepConfig> sweep;
  std::uint64_t seed = 0;
  int restarts = 1;
  int threads = 1;
  std::string output_dir = "out";
  /// The config as read, with command-line overrides applied (JSON text).
  std::string effective_json;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> restarts;
  std::optional<int> threads;
  std::optional<std::string> output_dir;
};

/// Parses and validates a config. Relative paths are resolved against
/// `base_dir`. Throws ConfigError naming the offending key.
RunConfig parse_config(const std::string& text, const Overrides& overrides = {},
                       const std::string& base_dir = ".");

}  // namespace crgate::cli
