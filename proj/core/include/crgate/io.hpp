#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "crgate/analysis.hpp"
#include "crgate/controls.hpp"
#include "crgate/model.hpp"
#include "crgate/open_system.hpp"

namespace crgate::io {

/// Pulse CSV: t_ns (slice start), dt_ns, then one <name>_GHz column per control.
/// Amplitudes are written as angular / 2 pi.
std::vector<std::string> pulse_header(const std::vector<std::string>& names);
void write_pulse_csv(std::ostream& out, const controls::PwcPulse& pulse,
                     const std::vector<std::string>& names);
/// Inverse of write_pulse_csv; `names` receives the control names if given.
controls::PwcPulse read_pulse_csv(std::istream& in, std::vector<std::string>* names = nullptr);

/// freq_GHz, then one magnitude column per control (in GHz, like the pulse).
void write_spectrum_csv(std::ostream& out, const analysis::Spectrum& spectrum,
                        const std::vector<std::string>& names);

std::vector<std::string> qsl_header();
void write_qsl_csv(std::ostream& out, const std::vector<analysis::SweepRecord>& records);
std::vector<std::string> miscalibration_header();
void write_miscalibration_csv(std::ostream& out,
                              const std::vector<analysis::MiscalibrationPoint>& points);
std::vector<std::string> dissipation_header();
void write_dissipation_csv(std::ostream& out,
                           const std::vector<open_system::DissipationPoint>& points);
std::vector<std::string> leakage_header();
void write_leakage_csv(std::ostream& out, const analysis::LeakageReport& report);

/// Flat parameter vector plus the metadata needed to rebuild the pulse.
struct ParamRecord {
  std::string ansatz;  // "pwc", "filtered_pwc", "two_carrier", "fourier"
  double duration_ns = 0.0;
  std::vector<double> params;             // internal units (rad/ns, rad)
  std::array<double, 2> offsets{};        // rad/ns
  std::map<std::string, double> metadata;
};

std::string to_json(const ParamRecord& rec);
ParamRecord param_record_from_json(const std::string& text);

/// Device parameters as JSON with the usual symbol names and GHz values:
/// Delta, g1, g2, alpha1, alpha2, delta1, delta2, f1, f2 and
/// levels {resonator, transmon1, transmon2}. Missing keys keep their defaults;
/// "g" and "alpha" set both transmons. Unknown keys throw ConfigError.
model::DeviceParams device_from_json(const std::string& text);
std::string device_to_json(const model::DeviceParams& params);

}  // namespace crgate::io
