#include "crgate/io.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "crgate/csv.hpp"
#include "crgate/errors.hpp"

namespace crgate::io {

using nlohmann::json;

namespace {

double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error("malformed number in " + what + ": '" + s + "'");
  }
}

}  // namespace

std::vector<std::string> pulse_header(const std::vector<std::string>& names) {
  std::vector<std::string> h{"t_ns", "dt_ns"};
  for (const auto& n : names) h.push_back(n + "_GHz");
  return h;
}

void write_pulse_csv(std::ostream& out, const controls::PwcPulse& pulse,
                     const std::vector<std::string>& names) {
  if (static_cast<int>(names.size()) != pulse.n_controls()) {
    throw DimensionError("one name per control is required");
  }
  csv::Writer w(out);
  w.row(pulse_header(names));
  const auto starts = pulse.slice_starts();
  for (int j = 0; j < pulse.n_slices(); ++j) {
    csv::Row row{csv::number(starts[j]), csv::number(pulse.durations[j])};
    for (int k = 0; k < pulse.n_controls(); ++k) {
      row.push_back(csv::number(angular_to_ghz(pulse.amplitudes(j, k))));
    }
    w.row(row);
  }
}

controls::PwcPulse read_pulse_csv(std::istream& in, std::vector<std::string>* names) {
  const auto rows = csv::parse(in);
  if (rows.size() < 2) throw Error("pulse CSV needs a header and at least one row");
  const auto& header = rows.front();
  if (header.size() < 3 || header[0] != "t_ns" || header[1] != "dt_ns") {
    throw Error("pulse CSV header must start with t_ns,dt_ns");
  }
  const int nc = static_cast<int>(header.size()) - 2;
  std::vector<std::string> found;
  for (int k = 0; k < nc; ++k) {
    const std::string& h = header[k + 2];
    const std::string suffix = "_GHz";
    if (h.size() <= suffix.size() || h.compare(h.size() - suffix.size(), suffix.size(), suffix)) {
      throw Error("pulse CSV control column '" + h + "' must end in _GHz");
    }
    found.push_back(h.substr(0, h.size() - suffix.size()));
  }
  controls::PwcPulse p;
  const int m = static_cast<int>(rows.size()) - 1;
  p.amplitudes.resize(m, nc);
  for (int j = 0; j < m; ++j) {
    const auto& r = rows[j + 1];
    if (static_cast<int>(r.size()) != nc + 2) throw Error("pulse CSV row has the wrong width");
    p.durations.push_back(parse_number(r[1], "dt_ns"));
    for (int k = 0; k < nc; ++k) {
      p.amplitudes(j, k) = ghz_to_angular(parse_number(r[k + 2], header[k + 2]));
    }
  }
  p.validate();
  if (names) *names = found;
  return p;
}

void write_spectrum_csv(std::ostream& out, const analysis::Spectrum& spectrum,
                        const std::vector<std::string>& names) {
  if (static_cast<Eigen::Index>(names.size()) != spectrum.magnitude.cols()) {
    throw DimensionError("one name per control is required");
  }
  csv::Writer w(out);
  csv::Row header{"freq_GHz"};
  for (const auto& n : names) header.push_back(n + "_GHz");
  w.row(header);
  for (std::size_t i = 0; i < spectrum.freq_ghz.size(); ++i) {
    csv::Row row{csv::number(spectrum.freq_ghz[i])};
    for (Eigen::Index k = 0; k < spectrum.magnitude.cols(); ++k) {
      row.push_back(csv::number(angular_to_ghz(spectrum.magnitude(static_cast<Eigen::Index>(i), k))));
    }
    w.row(row);
  }
}

std::vector<std::string> qsl_header() {
  return {"duration_ns", "restarts", "mean", "log_mean", "median", "best", "max",
          "converged", "target_reached", "max_iter", "line_search_failure", "null_gradient",
          "error"};
}

void write_qsl_csv(std::ostream& out, const std::vector<analysis::SweepRecord>& records) {
  csv::Writer w(out);
  w.row(qsl_header());
  for (const auto& r : records) {
    auto count = [&](const char* key) {
      const auto it = r.status_counts.find(key);
      return std::to_string(it == r.status_counts.end() ? 0 : it->second);
    };
    w.row({csv::number(r.duration), std::to_string(r.restarts), csv::number(r.mean),
           csv::number(r.log_mean), csv::number(r.median), csv::number(r.best),
           csv::number(r.max), count("converged"), count("target-reached"), count("max-iter"),
           count("line-search-failure"), count("null-gradient"), count("error")});
  }
}

std::vector<std::string> miscalibration_header() { return {"eps1_MHz", "eps2_MHz", "infidelity"}; }

void write_miscalibration_csv(std::ostream& out,
                              const std::vector<analysis::MiscalibrationPoint>& points) {
  csv::Writer w(out);
  w.row(miscalibration_header());
  for (const auto& p : points) {
    w.row({csv::number(angular_to_ghz(p.eps1) * 1e3), csv::number(angular_to_ghz(p.eps2) * 1e3),
           csv::number(p.infidelity)});
  }
}

std::vector<std::string> dissipation_header() { return {"T1_us", "F_avg", "infidelity"}; }

void write_dissipation_csv(std::ostream& out,
                           const std::vector<open_system::DissipationPoint>& points) {
  csv::Writer w(out);
  w.row(dissipation_header());
  for (const auto& p : points) {
    if (p.error) {
      w.row({csv::number(p.t1_ns * 1e-3), "", ""});
    } else {
      w.row({csv::number(p.t1_ns * 1e-3), csv::number(p.f_avg), csv::number(p.infidelity)});
    }
  }
}

std::vector<std::string> leakage_header() { return {"level", "resonator_max", "transmon_max"}; }

void write_leakage_csv(std::ostream& out, const analysis::LeakageReport& report) {
  csv::Writer w(out);
  w.row(leakage_header());
  const std::size_t n = std::max(report.resonator_max.size(), report.transmon_max.size());
  for (std::size_t l = 0; l < n; ++l) {
    w.row({std::to_string(l + 1),
           l < report.resonator_max.size() ? csv::number(report.resonator_max[l]) : "",
           l < report.transmon_max.size() ? csv::number(report.transmon_max[l]) : ""});
  }
}

std::string to_json(const ParamRecord& rec) {
  json j;
  j["ansatz"] = rec.ansatz;
  j["duration_ns"] = rec.duration_ns;
  j["units"] = "rad/ns";
  j["params"] = rec.params;
  j["offsets"] = rec.offsets;
  j["metadata"] = rec.metadata;
  return j.dump(2);
}

ParamRecord param_record_from_json(const std::string& text) {
  ParamRecord rec;
  try {
    const json j = json::parse(text);
    rec.ansatz = j.at("ansatz").get<std::string>();
    rec.duration_ns = j.at("duration_ns").get<double>();
    rec.params = j.at("params").get<std::vector<double>>();
    rec.offsets = j.at("offsets").get<std::array<double, 2>>();
    if (j.contains("metadata")) rec.metadata = j["metadata"].get<std::map<std::string, double>>();
  } catch (const json::exception& e) {
    throw Error(std::string("malformed parameter record: ") + e.what());
  }
  return rec;
}

model::DeviceParams device_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("device", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("device", "device parameters must be an object");
  model::DeviceParams p;
  auto ghz = [&](const std::string& key) {
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(key, "must be a number (GHz)");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(key, "must be finite");
    return ghz_to_angular(x);
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "Delta") p.delta_cavity = ghz(key);
    else if (key == "g") p.g = {ghz(key), ghz(key)};
    else if (key == "g1") p.g[0] = ghz(key);
    else if (key == "g2") p.g[1] = ghz(key);
    else if (key == "alpha") p.alpha = {ghz(key), ghz(key)};
    else if (key == "alpha1") p.alpha[0] = ghz(key);
    else if (key == "alpha2") p.alpha[1] = ghz(key);
    else if (key == "delta1") p.delta_q[0] = ghz(key);
    else if (key == "delta2") p.delta_q[1] = ghz(key);
    else if (key == "f1") p.f[0] = ghz(key);
    else if (key == "f2") p.f[1] = ghz(key);
    else if (key == "levels") {
      if (!value.is_object()) throw ConfigError(key, "must be an object");
      for (const auto& [lk, lv] : value.items()) {
        const std::string full = "levels." + lk;
        if (!lv.is_number_integer()) throw ConfigError(full, "must be an integer");
        const int n = lv.get<int>();
        if (n < 2) throw ConfigError(full, "must be at least 2");
        if (lk == "resonator") p.levels.resonator = n;
        else if (lk == "transmon1") p.levels.transmon1 = n;
        else if (lk == "transmon2") p.levels.transmon2 = n;
        else throw ConfigError(full, "unknown key");
      }
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  p.validate();
  return p;
}

std::string device_to_json(const model::DeviceParams& p) {
  json j;
  j["Delta"] = angular_to_ghz(p.delta_cavity);
  j["g1"] = angular_to_ghz(p.g[0]);
  j["g2"] = angular_to_ghz(p.g[1]);
  j["alpha1"] = angular_to_ghz(p.alpha[0]);
  j["alpha2"] = angular_to_ghz(p.alpha[1]);
  j["delta1"] = angular_to_ghz(p.delta_q[0]);
  j["delta2"] = angular_to_ghz(p.delta_q[1]);
  j["f1"] = angular_to_ghz(p.f[0]);
  j["f2"] = angular_to_ghz(p.f[1]);
  j["levels"] = {{"resonator", p.levels.resonator},
                 {"transmon1", p.levels.transmon1},
                 {"transmon2", p.levels.transmon2}};
  return j.dump(2);
}

}  // namespace crgate::io
