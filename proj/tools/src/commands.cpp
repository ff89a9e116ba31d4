#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "crgate/analysis.hpp"
#include "crgate/errors.hpp"
#include "crgate/io.hpp"
#include "crgate/open_system.hpp"
#include "crgate/optimizer.hpp"
#include "crgate/presets.hpp"

namespace crgate::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kControlNames{"X1", "Y1", "X2", "Y2"};

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

/// Timestamped lines; the only output that is allowed to differ between reruns.
class RunLog {
 public:
  explicit RunLog(const fs::path& path) : out_(path) {
    if (!out_) throw Error("cannot write " + path.string());
  }
  template <class... Args>
  void line(const Args&... args) {
    out_ << timestamp() << ' ';
    (out_ << ... << args);
    out_ << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Hash of the settings that define the problem (not where or how fast it runs).
std::string problem_hash(const RunConfig& cfg) {
  json j = json::parse(cfg.effective_json);
  j.erase("output_dir");
  j.erase("threads");
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << fnv1a(j.dump());
  return s.str();
}

fs::path prepare_output(const RunConfig& cfg) {
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

presets::System make_system(const RunConfig& cfg) {
  model::HilbertLayout layout(cfg.device.levels);
  auto hams = model::build_hamiltonians(cfg.device, layout);
  auto goal = propagation::GoalSpec::from(model::make_target(layout, cfg.gate, cfg.control_qubit),
                                          cfg.local_phases);
  return {cfg.device, std::move(layout), std::move(hams), std::move(goal)};
}

/// Seeded optimization for one duration plus the map from its parameters to
/// fine-grid controls.
struct Pipeline {
  optimizer::SeededRun run;
  std::function<controls::PwcPulse(const RVec&)> to_pulse;
};

Pipeline build_pipeline(const RunConfig& cfg, const presets::System& sys, double duration) {
  const AnsatzConfig& an = cfg.ansatz;
  auto finish = [&](presets::GrapeExperiment e) {
    e.problem.optimize_offsets = an.optimize_offsets;
    e.problem.gradient_mode = cfg.gradient_mode;
    e.problem.ode_tol = cfg.ode_tol;
    auto shared = std::make_shared<const presets::GrapeExperiment>(std::move(e));
    return Pipeline{[shared](std::uint64_t seed) { return shared->run(seed); },
                    [shared](const RVec& p) { return shared->pulse(p); }};
  };
  switch (an.kind) {
    case AnsatzKind::Pwc: {
      auto e = presets::unconstrained(sys, duration, an.slices, an.init_range, cfg.stop);
      e.problem.hams = sys.hams.with_offsets(an.offsets);
      e.problem.bound = an.bound;
      return finish(std::move(e));
    }
    case AnsatzKind::FilteredPwc:
    case AnsatzKind::TwoCarrier: {
      const presets::BandwidthSpec spec{duration, an.pixel, an.dt_fine, an.buffer, an.sigma};
      auto e = an.kind == AnsatzKind::FilteredPwc
                   ? presets::single_carrier(sys, spec, an.bound, an.init_range, cfg.stop, an.offsets)
                   : presets::two_carrier(sys, spec, an.bound, an.init_range, cfg.stop, an.offsets);
      return finish(std::move(e));
    }
    case AnsatzKind::Fourier: {
      auto problem = std::make_shared<optimizer::OptimizationProblem>();
      problem->hams = sys.hams.with_offsets(an.offsets);
      problem->goal = sys.goal;
      problem->duration = duration;
      problem->optimize_offsets = an.optimize_offsets;
      problem->ode_tol = cfg.ode_tol;
      problem->stop = cfg.stop;
      const int nc = problem->hams.n_controls();
      const std::vector<std::vector<controls::FourierComponent>> zeros(
          nc, std::vector<controls::FourierComponent>(an.components));
      const controls::FourierAnsatz shape(zeros, *an.bound, duration, an.ramp_offset, an.edge_time);
      const controls::FourierInitSpec init{nc, an.components, *an.bound, an.omega_max};
      const double sample_dt = an.sample_dt;
      return Pipeline{
          [problem, shape, init](std::uint64_t seed) {
            auto f = shape;
            f.set_params(controls::random_init(init, seed));
            return optimizer::goat_optimize(*problem, f, seed);
          },
          [shape, sample_dt, duration](const RVec& params) {
            auto f = shape;
            f.set_params(params);
            const int n = std::max(2, static_cast<int>(std::ceil(duration / sample_dt - 1e-9)));
            auto pulse = controls::PwcPulse::uniform(duration, n, f.n_controls());
            const double dt = duration / n;
            for (int j = 0; j < n; ++j) pulse.amplitudes.row(j) = f.eval((j + 0.5) * dt).transpose();
            return pulse;
          }};
    }
  }
  throw Error("unknown ansatz");
}

json offsets_ghz(const std::array<double, 2>& f) {
  return json::array({angular_to_ghz(f[0]), angular_to_ghz(f[1])});
}

json result_json(const RunConfig& cfg, const optimizer::MultistartResult& ms) {
  const auto& best = ms.best;
  json j;
  j["ansatz"] = to_string(cfg.ansatz.kind);
  j["duration_ns"] = cfg.ansatz.duration;
  j["status"] = optim::to_string(best.status);
  j["infidelity"] = best.infidelity;
  j["seed"] = best.seed;
  j["iterations"] = best.iterations;
  j["evaluations"] = best.evaluations;
  j["grad_norm"] = best.grad_norm;
  j["offsets_GHz"] = offsets_ghz(best.offsets);
  j["params_units"] = "rad/ns";
  j["params"] = std::vector<double>(best.params.data(), best.params.data() + best.params.size());
  j["trace"] = best.trace;
  json ot = json::array();
  for (const auto& f : best.offset_trace) ot.push_back(offsets_ghz(f));
  j["offset_trace_GHz"] = ot;
  json runs = json::array();
  for (const auto& r : ms.runs) {
    json e;
    e["seed"] = r.seed;
    if (r.error) {
      e["error"] = *r.error;
    } else {
      e["status"] = optim::to_string(r.status);
      e["infidelity"] = r.infidelity;
      e["iterations"] = r.iterations;
    }
    runs.push_back(e);
  }
  j["restarts"] = runs;
  return j;
}

void write_manifest(const fs::path& dir, const RunConfig& cfg, const std::string& command,
                    const json& result, const std::vector<std::string>& files) {
  json m;
  m["command"] = command;
  m["problem_hash"] = problem_hash(cfg);
  m["seed"] = cfg.seed;
  m["restarts"] = cfg.restarts;
  m["config"] = json::parse(cfg.effective_json);
  m["result"] = result;
  m["files"] = files;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

controls::PwcPulse load_pulse(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("sweep.pulse_csv", "cannot open '" + path + "'");
  auto pulse = io::read_pulse_csv(in);
  if (pulse.n_controls() != 4) {
    throw ConfigError("sweep.pulse_csv", "expected the four controls X1, Y1, X2, Y2");
  }
  return pulse;
}

}  // namespace

int cmd_optimize(const RunConfig& cfg, std::ostream& console) {
  const fs::path dir = prepare_output(cfg);
  RunLog log(dir / "run.log");
  log.line("optimize ", to_string(cfg.ansatz.kind), " T=", cfg.ansatz.duration, " ns, seed ",
           cfg.seed, ", restarts ", cfg.restarts, ", threads ", cfg.threads);

  const auto sys = make_system(cfg);
  const Pipeline pipe = build_pipeline(cfg, sys, cfg.ansatz.duration);
  optimizer::MultistartOptions ms;
  ms.restarts = cfg.restarts;
  ms.base_seed = cfg.seed;
  ms.threads = cfg.threads;
  const auto result = optimizer::multistart(pipe.run, ms);
  for (const auto& r : result.runs) {
    if (r.error) {
      log.line("seed ", r.seed, " failed: ", *r.error);
    } else {
      log.line("seed ", r.seed, " ", optim::to_string(r.status), " infidelity ", r.infidelity,
               " after ", r.iterations, " iterations, ", r.wall_seconds, " s");
    }
  }

  const auto& best = result.best;
  const auto pulse = pipe.to_pulse(best.params);
  write_text(dir / "result.json", result_json(cfg, result).dump(2) + "\n");
  {
    std::ofstream out(dir / "pulse.csv", std::ios::binary);
    io::write_pulse_csv(out, pulse, kControlNames);
  }
  {
    std::ofstream out(dir / "spectrum.csv", std::ios::binary);
    io::write_spectrum_csv(out, analysis::pulse_spectrum(pulse), kControlNames);
  }
  json summary{{"status", optim::to_string(best.status)},
               {"infidelity", best.infidelity},
               {"seed", best.seed}};
  write_manifest(dir, cfg, "optimize", summary,
                 {"result.json", "pulse.csv", "spectrum.csv", "run.log"});
  log.line("best seed ", best.seed, ": ", optim::to_string(best.status), " infidelity ",
           best.infidelity);

  console << "best infidelity " << best.infidelity << " (seed " << best.seed << ", "
          << optim::to_string(best.status) << ")\n";
  return best.succeeded() ? kSuccess : kNotConverged;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& console) {
  if (!cfg.sweep) throw ConfigError("sweep", "is required for the sweep command");
  const SweepConfig& sw = *cfg.sweep;
  const fs::path dir = prepare_output(cfg);
  RunLog log(dir / "run.log");
  log.line("sweep ", sw.selector, ", seed ", cfg.seed, ", threads ", cfg.threads);

  const auto sys = make_system(cfg);
  const std::string file = sw.selector + ".csv";
  std::ofstream out(dir / file, std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / file).string());
  json summary;

  if (sw.selector == "qsl") {
    optimizer::MultistartOptions ms;
    ms.restarts = cfg.restarts;
    ms.base_seed = cfg.seed;
    ms.threads = cfg.threads;
    const auto records = analysis::qsl_sweep(
        sw.durations, [&](double t) { return build_pipeline(cfg, sys, t).run; }, ms);
    io::write_qsl_csv(out, records);
    for (const auto& r : records) {
      log.line("T=", r.duration, " ns: mean ", r.mean, ", best ", r.best, " over ", r.restarts,
               " restarts");
    }
    summary["points"] = records.size();
  } else {
    const auto pulse = load_pulse(sw.pulse_csv);
    const auto offsets = sw.offsets.value_or(cfg.device.f);
    const auto hams = sys.hams.with_offsets(offsets);
    if (sw.selector == "miscalibration") {
      std::vector<std::array<double, 2>> grid;
      for (double e1 : sw.eps) {
        for (double e2 : sw.eps) grid.push_back({e1, e2});
      }
      const auto pts = analysis::miscalibration_sweep(hams, pulse, sys.goal, grid);
      io::write_miscalibration_csv(out, pts);
      summary["points"] = pts.size();
    } else if (sw.selector == "dissipation") {
      const auto pts = open_system::dissipation_sweep(hams, sys.layout, pulse, sys.goal, sw.t1,
                                                      sw.tp, cfg.threads);
      io::write_dissipation_csv(out, pts);
      for (const auto& p : pts) {
        if (p.error) log.line("T1=", p.t1_ns, " ns failed: ", *p.error);
      }
      summary["points"] = pts.size();
    } else {
      model::DeviceParams device = cfg.device;
      device.f = offsets;
      const auto rep = analysis::leakage_probe(device, sw.levels, pulse, sys.goal.target);
      io::write_leakage_csv(out, rep);
      summary["normalization_error"] = rep.normalization_error;
      summary["infidelity"] = rep.infidelity;
    }
  }
  out.close();
  write_manifest(dir, cfg, "sweep " + sw.selector, summary, {file, "run.log"});
  log.line("done");
  console << "wrote " << (dir / file).string() << "\n";
  return kSuccess;
}

}  // namespace crgate::cli
