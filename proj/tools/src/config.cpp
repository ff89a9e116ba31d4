#include "config.hpp"

#include <cmath>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "crgate/errors.hpp"
#include "crgate/io.hpp"
#include "crgate/presets.hpp"

namespace crgate::cli {

using nlohmann::json;

std::string to_string(AnsatzKind kind) {
  switch (kind) {
    case AnsatzKind::Pwc: return "pwc";
    case AnsatzKind::FilteredPwc: return "filtered_pwc";
    case AnsatzKind::TwoCarrier: return "two_carrier";
    case AnsatzKind::Fourier: return "fourier";
  }
  return "?";
}

namespace {

/// Typed access to one JSON object that remembers which keys were read, so
/// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  bool has(const std::string& k) {
    used_.insert(k);
    return j_.contains(k);
  }

  const json& raw(const std::string& k) {
    used_.insert(k);
    return j_.at(k);
  }

  double number(const std::string& k, double fallback) {
    if (!has(k)) return fallback;
    const json& v = j_.at(k);
    if (!v.is_number()) throw ConfigError(key(k), "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(key(k), "must be finite");
    return x;
  }

  double positive(const std::string& k, double fallback) {
    const double x = number(k, fallback);
    if (!(x > 0.0)) throw ConfigError(key(k), "must be positive");
    return x;
  }

  int integer(const std::string& k, int fallback, int min) {
    if (!has(k)) return fallback;
    const json& v = j_.at(k);
    if (!v.is_number_integer()) throw ConfigError(key(k), "must be an integer");
    const auto x = v.get<long long>();
    if (x < min) throw ConfigError(key(k), "must be at least " + std::to_string(min));
    return static_cast<int>(x);
  }

  bool boolean(const std::string& k, bool fallback) {
    if (!has(k)) return fallback;
    const json& v = j_.at(k);
    if (!v.is_boolean()) throw ConfigError(key(k), "must be true or false");
    return v.get<bool>();
  }

  std::string choice(const std::string& k, const std::string& fallback,
                     const std::set<std::string>& allowed) {
    if (!has(k)) return fallback;
    const json& v = j_.at(k);
    if (!v.is_string()) throw ConfigError(key(k), "must be a string");
    const auto s = v.get<std::string>();
    if (!allowed.count(s)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError(key(k), "unknown value '" + s + "' (expected one of " + list + ")");
    }
    return s;
  }

  std::vector<double> numbers(const std::string& k) {
    if (!has(k)) return {};
    const json& v = j_.at(k);
    if (!v.is_array()) throw ConfigError(key(k), "must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number() || !std::isfinite(x.get<double>())) {
        throw ConfigError(key(k), "must be an array of finite numbers");
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::optional<std::array<double, 2>> pair(const std::string& k) {
    if (!has(k)) return std::nullopt;
    const auto v = numbers(k);
    if (v.size() != 2) throw ConfigError(key(k), "must hold exactly two numbers");
    return std::array<double, 2>{v[0], v[1]};
  }

  /// Child object; an absent key reads as an empty object.
  Section child(const std::string& k) {
    static const json empty = json::object();
    return Section(has(k) ? j_.at(k) : empty, key(k));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError(key(k), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

AnsatzKind parse_kind(const std::string& s) {
  if (s == "pwc") return AnsatzKind::Pwc;
  if (s == "filtered_pwc") return AnsatzKind::FilteredPwc;
  if (s == "fourier") return AnsatzKind::Fourier;
  return AnsatzKind::TwoCarrier;
}

void parse_ansatz(Section a, RunConfig& cfg, bool device_sets_offsets) {
  AnsatzConfig& an = cfg.ansatz;
  an.kind = parse_kind(
      a.choice("type", "two_carrier", {"pwc", "filtered_pwc", "two_carrier", "fourier"}));
  const bool pwc = an.kind == AnsatzKind::Pwc;
  const bool filtered = an.kind == AnsatzKind::FilteredPwc || an.kind == AnsatzKind::TwoCarrier;
  const auto defaults = an.kind == AnsatzKind::FilteredPwc ? presets::single_carrier_spec()
                                                           : presets::two_carrier_spec();

  an.duration = a.positive("duration_ns", defaults.duration);
  if (pwc) an.slices = a.integer("slices", 500, 1);
  if (filtered) {
    an.pixel = a.positive("pixel_ns", defaults.pixel);
    an.dt_fine = a.positive("dt_fine_ns", defaults.dt_fine);
    an.buffer = a.number("buffer_ns", defaults.buffer);
    if (an.buffer < 0.0) throw ConfigError(a.key("buffer_ns"), "must not be negative");
    an.sigma = a.positive("sigma_ns", defaults.sigma);
  }

  const double default_bound_ghz = 0.4;
  if (a.has("bound_GHz") && a.raw("bound_GHz").is_null()) {
    if (an.kind == AnsatzKind::Fourier) {
      throw ConfigError(a.key("bound_GHz"), "the Fourier ansatz needs a finite bound");
    }
    an.bound.reset();
  } else if (pwc && !a.has("bound_GHz")) {
    an.bound.reset();
  } else {
    an.bound = ghz_to_angular(a.positive("bound_GHz", default_bound_ghz));
  }

  an.init_range = ghz_to_angular(a.number("init_range_GHz", pwc ? 0.2 : 0.05));
  if (an.init_range < 0.0) throw ConfigError(a.key("init_range_GHz"), "must not be negative");
  an.optimize_offsets = a.boolean("optimize_offsets", filtered);
  if (!device_sets_offsets) an.offsets = pwc ? std::array<double, 2>{0, 0} : presets::guess_offsets();

  if (an.kind == AnsatzKind::Fourier) {
    an.components = a.integer("components", 3, 1);
    an.omega_max = ghz_to_angular(a.positive("omega_max_GHz", 0.5));
    an.ramp_offset = a.number("ramp_offset_ns", 2.0);
    an.edge_time = a.positive("edge_time_ns", 0.25);
    an.sample_dt = a.positive("sample_dt_ns", 0.05);
    if (an.ramp_offset < 0.0) throw ConfigError(a.key("ramp_offset_ns"), "must not be negative");
  }
  a.finish();
}

void parse_optimizer(Section o, RunConfig& cfg) {
  cfg.stop.max_iterations = o.integer("max_iterations", 2000, 0);
  cfg.stop.grad_tol = o.positive("grad_tol", 1e-9);
  // Unconstrained runs aim at the numerical floor, bounded ones at 1e-4.
  const double target_default = cfg.ansatz.bound ? 1e-4 : 1e-10;
  if (o.has("target_infidelity") && o.raw("target_infidelity").is_null()) {
    cfg.stop.target_infidelity.reset();
  } else {
    const double t = o.number("target_infidelity", target_default);
    if (t < 0.0 || t >= 1.0) throw ConfigError(o.key("target_infidelity"), "must lie in [0, 1)");
    cfg.stop.target_infidelity = t;
  }
  cfg.gradient_mode = o.choice("gradient", "exact", {"exact", "first_order"}) == "exact"
                          ? propagation::GradientMode::Exact
                          : propagation::GradientMode::FirstOrder;
  cfg.ode_tol.rtol = o.positive("ode_rtol", cfg.ode_tol.rtol);
  cfg.ode_tol.atol = o.positive("ode_atol", cfg.ode_tol.atol);
  o.finish();
}

void parse_sweep(Section s, RunConfig& cfg, const std::filesystem::path& base) {
  SweepConfig sw;
  sw.selector = s.choice("selector", "", {"qsl", "miscalibration", "dissipation", "leakage"});
  if (sw.selector.empty()) throw ConfigError(s.key("selector"), "is required");
  const bool needs_pulse = sw.selector != "qsl";

  if (sw.selector == "qsl") {
    sw.durations = s.numbers("durations_ns");
    if (sw.durations.empty()) throw ConfigError(s.key("durations_ns"), "needs at least one duration");
    for (double t : sw.durations) {
      if (!(t > 0.0)) throw ConfigError(s.key("durations_ns"), "durations must be positive");
    }
  }
  if (needs_pulse) {
    if (!s.has("pulse_csv") || !s.raw("pulse_csv").is_string()) {
      throw ConfigError(s.key("pulse_csv"), "a pulse CSV path is required for this selector");
    }
    std::filesystem::path p = s.raw("pulse_csv").get<std::string>();
    sw.pulse_csv = (p.is_relative() ? base / p : p).string();
    if (auto off = s.pair("offsets_GHz")) {
      sw.offsets = std::array<double, 2>{ghz_to_angular((*off)[0]), ghz_to_angular((*off)[1])};
    }
  }
  if (sw.selector == "miscalibration") {
    for (double mhz : s.numbers("eps_MHz")) sw.eps.push_back(ghz_to_angular(mhz * 1e-3));
    if (sw.eps.empty()) throw ConfigError(s.key("eps_MHz"), "needs at least one value");
  }
  if (sw.selector == "dissipation") {
    for (double us : s.numbers("t1_us")) {
      if (!(us > 0.0)) throw ConfigError(s.key("t1_us"), "times must be positive");
      sw.t1.push_back(us * 1e3);
    }
    if (sw.t1.empty()) throw ConfigError(s.key("t1_us"), "needs at least one value");
    sw.tp = s.positive("tp_us", 100.0) * 1e3;
  }
  if (sw.selector == "leakage") {
    Section l = s.child("levels");
    sw.levels.resonator = l.integer("resonator", 6, 2);
    sw.levels.transmon1 = l.integer("transmon1", 6, 2);
    sw.levels.transmon2 = l.integer("transmon2", 6, 2);
    l.finish();
  }
  s.finish();
  cfg.sweep = sw;
}

}  // namespace

RunConfig parse_config(const std::string& text, const Overrides& overrides,
                       const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("<root>", "must be an object");
  if (overrides.seed) j["seed"] = *overrides.seed;
  if (overrides.restarts) j["restarts"] = *overrides.restarts;
  if (overrides.threads) j["threads"] = *overrides.threads;
  if (overrides.output_dir) j["output_dir"] = *overrides.output_dir;

  RunConfig cfg;
  cfg.effective_json = j.dump(2);
  Section root(j, "");

  bool device_sets_offsets = false;
  if (root.has("device")) {
    const json& d = root.raw("device");
    try {
      cfg.device = io::device_from_json(d.dump());
    } catch (const ConfigError& e) {
      throw ConfigError("device." + e.key(), e.detail());
    } catch (const Error& e) {
      throw ConfigError("device", e.what());
    }
    device_sets_offsets = d.is_object() && (d.contains("f1") || d.contains("f2"));
  }

  Section target = root.child("target");
  cfg.gate = target.choice("gate", "cnot", {"cnot", "identity"}) == "cnot"
                 ? model::GateKind::Cnot
                 : model::GateKind::Identity;
  cfg.control_qubit = target.integer("control_qubit", 1, 1);
  if (cfg.control_qubit > 2) throw ConfigError("target.control_qubit", "must be 1 or 2");
  cfg.local_phases = target.boolean("local_phases", false);
  target.finish();

  cfg.ansatz.offsets = cfg.device.f;
  parse_ansatz(root.child("ansatz"), cfg, device_sets_offsets);
  parse_optimizer(root.child("optimizer"), cfg);
  if (root.has("sweep")) parse_sweep(root.child("sweep"), cfg, base_dir);

  if (root.has("seed")) {
    const json& s = root.raw("seed");
    if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<long long>() < 0)) {
      throw ConfigError("seed", "must be a non-negative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  cfg.restarts = root.integer("restarts", 1, 1);
  cfg.threads = root.integer("threads", 1, 1);
  if (root.has("output_dir")) {
    if (!root.raw("output_dir").is_string()) throw ConfigError("output_dir", "must be a string");
    cfg.output_dir = root.raw("output_dir").get<std::string>();
  }
  root.finish();
  return cfg;
}

}  // namespace crgate::cli
