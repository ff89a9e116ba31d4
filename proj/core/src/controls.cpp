#include "crgate/controls.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "crgate/errors.hpp"

namespace crgate::controls {

namespace {

int checked_count(double length, double step, const char* what) {
  const double ratio = length / step;
  const long n = std::lround(ratio);
  if (n <= 0 || std::abs(ratio - static_cast<double>(n)) > 1e-6) {
    throw DomainError(std::string(what) + " must be a positive integer multiple of the step");
  }
  return static_cast<int>(n);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// --------------------------------------------------------------------------- PwcPulse

PwcPulse PwcPulse::uniform(double duration, int slices, int n_controls) {
  if (!(duration > 0.0)) throw DomainError("pulse duration must be positive");
  if (slices < 1 || n_controls < 0) throw DimensionError("need at least one slice");
  PwcPulse p;
  p.durations.assign(slices, duration / slices);
  p.amplitudes = RMat::Zero(slices, n_controls);
  return p;
}

double PwcPulse::duration() const {
  return std::accumulate(durations.begin(), durations.end(), 0.0);
}

bool PwcPulse::is_uniform(double tol) const {
  if (durations.empty()) return false;
  return std::all_of(durations.begin(), durations.end(),
                     [&](double d) { return std::abs(d - durations.front()) <= tol; });
}

std::vector<double> PwcPulse::slice_starts() const {
  std::vector<double> starts(durations.size());
  double t = 0.0;
  for (std::size_t j = 0; j < durations.size(); ++j) {
    starts[j] = t;
    t += durations[j];
  }
  return starts;
}

std::vector<double> PwcPulse::slice_midpoints() const {
  auto mids = slice_starts();
  for (std::size_t j = 0; j < mids.size(); ++j) mids[j] += 0.5 * durations[j];
  return mids;
}

int PwcPulse::slice_at(double t) const {
  const double total = duration();
  if (!(t >= 0.0 && t <= total)) throw DomainError("time outside [0, T]");
  const auto starts = slice_starts();
  const auto it = std::upper_bound(starts.begin(), starts.end(), t);
  const int j = static_cast<int>(it - starts.begin()) - 1;
  return std::clamp(j, 0, n_slices() - 1);
}

RVec PwcPulse::eval(double t) const { return amplitudes.row(slice_at(t)).transpose(); }

void PwcPulse::validate() const {
  if (durations.empty()) throw DimensionError("pulse has no slices");
  if (static_cast<int>(amplitudes.rows()) != n_slices()) {
    throw DimensionError("amplitude rows must match the slice count");
  }
  for (double d : durations) {
    if (!(d > 0.0)) throw DomainError("slice durations must be positive");
  }
  if (!amplitudes.allFinite()) throw DomainError("amplitudes must be finite");
  if (bound && amplitudes.size() > 0 && amplitudes.cwiseAbs().maxCoeff() > *bound) {
    throw DomainError("amplitude exceeds the bound");
  }
  const auto mids = slice_midpoints();
  const double total = duration();
  for (int j = 0; j < n_slices(); ++j) {
    const bool in_buffer = mids[j] < lead_buffer || mids[j] > total - trail_buffer;
    if (in_buffer && amplitudes.row(j).cwiseAbs().maxCoeff() != 0.0) {
      throw DomainError("buffer slices must be exactly zero");
    }
  }
}

// --------------------------------------------------------------------------- filtering

void FilterSpec::validate() const {
  if (!(sigma > 0.0)) throw DomainError("filter sigma must be positive");
  if (!(dt_fine > 0.0)) throw DomainError("fine step must be positive");
  if (dt_fine > sigma / 4.0 * (1.0 + 1e-12)) {
    throw ResolutionError("fine step must resolve the filter (dt_fine <= sigma / 4)");
  }
}

GaussianKernel::GaussianKernel(double sigma, double step) {
  if (!(sigma > 0.0) || !(step > 0.0)) throw DomainError("kernel needs sigma, step > 0");
  half_width_ = static_cast<int>(std::floor(5.0 * sigma / step + 1e-9));
  taps_.resize(2 * half_width_ + 1);
  for (int m = -half_width_; m <= half_width_; ++m) {
    const double x = m * step / sigma;
    taps_[m + half_width_] = std::exp(-0.5 * x * x);
  }
  taps_ /= taps_.sum();
}

RVec GaussianKernel::apply(const RVec& samples) const {
  const int n = static_cast<int>(samples.size());
  RVec out = RVec::Zero(n);
  for (int i = 0; i < n; ++i) {
    const double v = samples[i];
    if (v == 0.0) continue;
    const int lo = std::max(0, i - half_width_);
    const int hi = std::min(n - 1, i + half_width_);
    for (int o = lo; o <= hi; ++o) out[o] += taps_[o - i + half_width_] * v;
  }
  return out;
}

PwcPulse gaussian_filter(const PwcPulse& pulse, const FilterSpec& spec) {
  spec.validate();
  pulse.validate();
  const double total = pulse.duration();
  const int n_fine = checked_count(total, spec.dt_fine, "pulse duration");
  const double dt = total / n_fine;
  const GaussianKernel kernel(spec.sigma, dt);

  PwcPulse out = PwcPulse::uniform(total, n_fine, pulse.n_controls());
  out.lead_buffer = 0.0;
  out.trail_buffer = 0.0;
  RVec column(n_fine);
  for (int k = 0; k < pulse.n_controls(); ++k) {
    for (int n = 0; n < n_fine; ++n) column[n] = pulse.eval((n + 0.5) * dt)[k];
    out.amplitudes.col(k) = kernel.apply(column);
  }
  return out;
}

double gaussian_transfer(double sigma, double nu_ghz) {
  const double w = kTwoPi * nu_ghz;
  return std::exp(-0.5 * w * w * sigma * sigma);
}

// --------------------------------------------------------------------------- Fourier

FourierAnsatz::FourierAnsatz(std::vector<std::vector<FourierComponent>> components, double bound,
                             double duration, double ramp_offset, double edge_time)
    : components_(std::move(components)),
      bound_(bound),
      duration_(duration),
      ramp_offset_(ramp_offset),
      edge_time_(edge_time) {
  if (!(bound_ > 0.0)) throw DomainError("Fourier bound must be positive");
  if (!(duration_ > 0.0)) throw DomainError("duration must be positive");
  if (!(edge_time_ > 0.0)) throw DomainError("edge time must be positive");
  int offset = 0;
  for (const auto& c : components_) {
    offsets_.push_back(offset);
    offset += 3 * static_cast<int>(c.size());
  }
}

int FourierAnsatz::n_components() const {
  int n = 0;
  for (const auto& c : components_) n += static_cast<int>(c.size());
  return n;
}

void FourierAnsatz::check_time(double t) const {
  if (!(t >= 0.0 && t <= duration_)) throw DomainError("time outside [0, T]");
}

double FourierAnsatz::window(double t) const {
  return sigmoid((t - ramp_offset_) / edge_time_) *
         sigmoid((duration_ - ramp_offset_ - t) / edge_time_);
}

double FourierAnsatz::raw(int control, double t) const {
  double s = 0.0;
  for (const auto& c : components_.at(control)) s += c.amplitude * std::cos(c.omega * t + c.phase);
  return s;
}

void FourierAnsatz::eval(double t, RVec& amplitudes) const {
  check_time(t);
  const double w = window(t);
  amplitudes.resize(n_controls());
  for (int k = 0; k < n_controls(); ++k) {
    amplitudes[k] = bound_ * std::tanh(raw(k, t) / bound_) * w;
  }
}

RVec FourierAnsatz::eval(double t) const {
  RVec out;
  eval(t, out);
  return out;
}

void FourierAnsatz::param_grad(double t, RVec& partials) const {
  check_time(t);
  const double w = window(t);
  partials.resize(n_params());
  for (int k = 0; k < n_controls(); ++k) {
    const double th = std::tanh(raw(k, t) / bound_);
    const double scale = (1.0 - th * th) * w;  // d/d raw of B tanh(raw / B) W
    int p = offsets_[k];
    for (const auto& c : components_[k]) {
      const double arg = c.omega * t + c.phase;
      const double cs = std::cos(arg);
      const double sn = std::sin(arg);
      partials[p++] = scale * cs;
      partials[p++] = -scale * c.amplitude * t * sn;
      partials[p++] = -scale * c.amplitude * sn;
    }
  }
}

int FourierAnsatz::owner(int param) const {
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), param);
  return static_cast<int>(it - offsets_.begin()) - 1;
}

RVec FourierAnsatz::params() const {
  RVec p(n_params());
  int i = 0;
  for (const auto& comps : components_) {
    for (const auto& c : comps) {
      p[i++] = c.amplitude;
      p[i++] = c.omega;
      p[i++] = c.phase;
    }
  }
  return p;
}

void FourierAnsatz::set_params(const RVec& params) {
  if (params.size() != n_params()) throw DimensionError("Fourier parameter count mismatch");
  int i = 0;
  for (auto& comps : components_) {
    for (auto& c : comps) {
      c.amplitude = params[i++];
      c.omega = params[i++];
      c.phase = params[i++];
    }
  }
}

FourierAnsatz FourierAnsatz::without(int control, int component) const {
  auto comps = components_;
  auto& list = comps.at(control);
  if (component < 0 || component >= static_cast<int>(list.size())) {
    throw DimensionError("no such Fourier component");
  }
  list.erase(list.begin() + component);
  return FourierAnsatz(std::move(comps), bound_, duration_, ramp_offset_, edge_time_);
}

// --------------------------------------------------------------------------- staircase

StaircaseControls::StaircaseControls(PwcPulse pulse) : pulse_(std::move(pulse)) {
  pulse_.validate();
}

std::vector<double> StaircaseControls::breakpoints() const {
  auto starts = pulse_.slice_starts();
  starts.erase(starts.begin());
  return starts;
}

void StaircaseControls::eval(double t, RVec& amplitudes) const { amplitudes = pulse_.eval(t); }

void StaircaseControls::param_grad(double t, RVec& partials) const {
  const int m = pulse_.n_slices();
  const int j = pulse_.slice_at(t);
  partials = RVec::Zero(n_params());
  for (int k = 0; k < n_controls(); ++k) partials[k * m + j] = 1.0;
}

RVec StaircaseControls::params() const {
  return Eigen::Map<const RVec>(pulse_.amplitudes.data(), pulse_.amplitudes.size());
}

void StaircaseControls::set_params(const RVec& params) {
  if (params.size() != n_params()) throw DimensionError("staircase parameter count mismatch");
  pulse_.amplitudes = Eigen::Map<const RMat>(params.data(), pulse_.n_slices(), n_controls());
}

WithStaticOffsets::WithStaticOffsets(std::shared_ptr<AnalyticControls> base,
                                     std::array<double, 2> offsets)
    : base_(std::move(base)), offsets_(offsets) {
  if (!base_) throw DomainError("null base controls");
}

void WithStaticOffsets::eval(double t, RVec& amplitudes) const {
  RVec inner;
  base_->eval(t, inner);
  amplitudes.resize(inner.size() + 2);
  amplitudes.head(inner.size()) = inner;
  amplitudes[inner.size()] = offsets_[0];
  amplitudes[inner.size() + 1] = offsets_[1];
}

void WithStaticOffsets::param_grad(double t, RVec& partials) const {
  RVec inner;
  base_->param_grad(t, inner);
  partials.resize(inner.size() + 2);
  partials.head(inner.size()) = inner;
  partials[inner.size()] = 1.0;
  partials[inner.size() + 1] = 1.0;
}

int WithStaticOffsets::owner(int param) const {
  const int nb = base_->n_params();
  if (param < nb) return base_->owner(param);
  return base_->n_controls() + (param - nb);
}

RVec WithStaticOffsets::params() const {
  const RVec inner = base_->params();
  RVec p(inner.size() + 2);
  p << inner, offsets_[0], offsets_[1];
  return p;
}

void WithStaticOffsets::set_params(const RVec& params) {
  const int nb = base_->n_params();
  if (params.size() != nb + 2) throw DimensionError("parameter count mismatch");
  base_->set_params(params.head(nb));
  offsets_ = {params[nb], params[nb + 1]};
}

// --------------------------------------------------------------------------- pixel maps

PixelChannel::PixelChannel(double duration, double pixel, double dt_fine, double lead,
                           double trail, std::optional<double> sigma)
    : duration_(duration), pixel_(pixel), dt_fine_(dt_fine) {
  if (!(duration > 0.0) || !(pixel > 0.0) || !(dt_fine > 0.0)) {
    throw DomainError("duration, pixel and fine step must be positive");
  }
  if (lead < 0.0 || trail < 0.0) throw DomainError("buffers must be non-negative");
  n_fine_ = checked_count(duration, dt_fine, "duration");
  dt_fine_ = duration / n_fine_;
  fine_per_pixel_ = checked_count(pixel, dt_fine_, "pixel length");
  lead_fine_ = std::lround(lead / dt_fine_);
  const int trail_fine = static_cast<int>(std::lround(trail / dt_fine_));
  const int active = n_fine_ - lead_fine_ - trail_fine;
  if (active <= 0) throw DomainError("buffers leave no active window");
  n_pixels_ = (active + fine_per_pixel_ - 1) / fine_per_pixel_;
  if (sigma) {
    if (!(*sigma > 0.0)) throw DomainError("filter sigma must be positive");
    sub_ = std::max(1, static_cast<int>(std::ceil(dt_fine_ / (*sigma / 4.0) - 1e-9)));
    kernel_.emplace(*sigma, dt_fine_ / sub_);
  }
}

RVec PixelChannel::to_sub_grid(const RVec& pixels) const {
  RVec sub = RVec::Zero(static_cast<Eigen::Index>(n_fine_) * sub_);
  const int active_end = lead_fine_ + n_pixels_ * fine_per_pixel_;
  for (int n = lead_fine_; n < std::min(active_end, n_fine_); ++n) {
    const int px = (n - lead_fine_) / fine_per_pixel_;
    if (px < n_pixels_) {
      sub.segment(static_cast<Eigen::Index>(n) * sub_, sub_).setConstant(pixels[px]);
    }
  }
  return sub;
}

RVec PixelChannel::forward(const RVec& pixels) const {
  if (pixels.size() != n_pixels_) throw DimensionError("pixel count mismatch");
  RVec sub = to_sub_grid(pixels);
  if (kernel_) sub = kernel_->apply(sub);
  RVec fine(n_fine_);
  for (int n = 0; n < n_fine_; ++n) {
    fine[n] = sub.segment(static_cast<Eigen::Index>(n) * sub_, sub_).mean();
  }
  return fine;
}

RVec PixelChannel::adjoint(const RVec& fine) const {
  if (fine.size() != n_fine_) throw DimensionError("fine sample count mismatch");
  RVec sub(static_cast<Eigen::Index>(n_fine_) * sub_);
  for (int n = 0; n < n_fine_; ++n) {
    sub.segment(static_cast<Eigen::Index>(n) * sub_, sub_).setConstant(fine[n] / sub_);
  }
  if (kernel_) sub = kernel_->apply(sub);
  RVec pixels = RVec::Zero(n_pixels_);
  for (int n = lead_fine_; n < n_fine_; ++n) {
    const int px = (n - lead_fine_) / fine_per_pixel_;
    if (px >= n_pixels_) break;
    pixels[px] += sub.segment(static_cast<Eigen::Index>(n) * sub_, sub_).sum();
  }
  return pixels;
}

PwcPulse ControlMap::to_pulse(const RVec& params) const {
  PwcPulse p = PwcPulse::uniform(dt_fine() * n_fine(), n_fine(), n_controls());
  p.amplitudes = forward(params);
  return p;
}

DirectMap::DirectMap(double duration, int slices, int n_controls)
    : duration_(duration), slices_(slices), controls_(n_controls) {
  if (!(duration > 0.0)) throw DomainError("duration must be positive");
  if (slices < 1 || n_controls < 1) throw DimensionError("need slices and controls");
}

RMat DirectMap::forward(const RVec& params) const {
  if (params.size() != n_params()) throw DimensionError("parameter count mismatch");
  return Eigen::Map<const RMat>(params.data(), slices_, controls_);
}

RVec DirectMap::adjoint(const RMat& fine_gradient) const {
  return Eigen::Map<const RVec>(fine_gradient.data(), fine_gradient.size());
}

FilteredPwcMap::FilteredPwcMap(PixelChannel channel, int n_controls)
    : channel_(std::move(channel)), controls_(n_controls) {}

RMat FilteredPwcMap::forward(const RVec& params) const {
  if (params.size() != n_params()) throw DimensionError("parameter count mismatch");
  const int np = channel_.n_pixels();
  RMat out(n_fine(), controls_);
  for (int k = 0; k < controls_; ++k) out.col(k) = channel_.forward(params.segment(k * np, np));
  return out;
}

RVec FilteredPwcMap::adjoint(const RMat& fine_gradient) const {
  const int np = channel_.n_pixels();
  RVec out(n_params());
  for (int k = 0; k < controls_; ++k) {
    out.segment(k * np, np) = channel_.adjoint(fine_gradient.col(k));
  }
  return out;
}

CarrierFrequencies two_carrier_frequencies(const model::DeviceParams& params) {
  const double delta = params.delta_q[1] + params.f[1];
  const double g = params.g[1];
  return {delta + g, delta - g};
}

TwoCarrierMap::TwoCarrierMap(PixelChannel channel, CarrierFrequencies carriers)
    : channel_(std::move(channel)), carriers_(carriers) {
  const int n = channel_.n_fine();
  const double dt = channel_.dt_fine();
  modulation_.resize(n, 4);
  for (int i = 0; i < n; ++i) {
    const double t = (i + 0.5) * dt;
    modulation_(i, 0) = modulation_(i, 1) = std::cos(carriers_.plus * t);
    modulation_(i, 2) = modulation_(i, 3) = std::cos(carriers_.minus * t);
  }
}

RMat TwoCarrierMap::forward(const RVec& params) const {
  if (params.size() != n_params()) throw DimensionError("parameter count mismatch");
  const int np = channel_.n_pixels();
  RMat out(n_fine(), 4);
  for (int k = 0; k < 4; ++k) {
    const RVec base = channel_.forward(params.segment((2 * k) * np, np));
    const RVec side = channel_.forward(params.segment((2 * k + 1) * np, np));
    out.col(k) = base + modulation_.col(k).cwiseProduct(side);
  }
  return out;
}

RVec TwoCarrierMap::adjoint(const RMat& fine_gradient) const {
  const int np = channel_.n_pixels();
  RVec out(n_params());
  for (int k = 0; k < 4; ++k) {
    out.segment((2 * k) * np, np) = channel_.adjoint(fine_gradient.col(k));
    out.segment((2 * k + 1) * np, np) =
        channel_.adjoint(modulation_.col(k).cwiseProduct(fine_gradient.col(k)));
  }
  return out;
}

PwcPulse TwoCarrierPulse::filtered_envelopes() const {
  if (envelopes.n_controls() != 8) throw DimensionError("two-carrier pulse needs 8 envelopes");
  return gaussian_filter(envelopes, filter);
}

namespace {

RVec combine_two_carrier(const RVec& env, double cos_plus, double cos_minus) {
  RVec c(4);
  c[0] = env[0] + cos_plus * env[1];
  c[1] = env[2] + cos_plus * env[3];
  c[2] = env[4] + cos_minus * env[5];
  c[3] = env[6] + cos_minus * env[7];
  return c;
}

}  // namespace

RVec TwoCarrierPulse::assemble(double t) const {
  const PwcPulse filtered = filtered_envelopes();
  return combine_two_carrier(filtered.eval(t), std::cos(carriers.plus * t),
                             std::cos(carriers.minus * t));
}

PwcPulse TwoCarrierPulse::to_controls() const {
  const PwcPulse filtered = filtered_envelopes();
  PwcPulse out = PwcPulse::uniform(filtered.duration(), filtered.n_slices(), 4);
  const auto mids = filtered.slice_midpoints();
  for (int n = 0; n < filtered.n_slices(); ++n) {
    out.amplitudes.row(n) =
        combine_two_carrier(filtered.amplitudes.row(n).transpose(),
                            std::cos(carriers.plus * mids[n]), std::cos(carriers.minus * mids[n]))
            .transpose();
  }
  return out;
}

// --------------------------------------------------------------------------- guesses

double cr_guess_x2(double t, double duration) {
  const double mu = duration / 2.0;
  const double sigma = duration / 4.0;
  const double x = (t - mu) / sigma;
  return ghz_to_angular(0.4) * std::exp(-0.5 * x * x);
}

double cr_guess_y2(double t, double duration, double delta2) {
  const double mu = duration / 2.0;
  const double sigma = duration / 4.0;
  const double derivative = -(t - mu) / (sigma * sigma) * cr_guess_x2(t, duration);
  return derivative / delta2;
}

CrGuess initial_guess_cr(const model::DeviceParams& params, double duration, int slices) {
  if (!(duration > 0.0)) throw DomainError("guess duration must be positive");
  if (params.delta_q[1] == 0.0) throw DomainError("delta_2 must be non-zero for the DRAG term");
  CrGuess guess;
  guess.pulse = PwcPulse::uniform(duration, slices, 4);
  const auto mids = guess.pulse.slice_midpoints();
  for (int j = 0; j < slices; ++j) {
    guess.pulse.amplitudes(j, 2) = cr_guess_x2(mids[j], duration);
    guess.pulse.amplitudes(j, 3) = cr_guess_y2(mids[j], duration, params.delta_q[1]);
  }
  guess.offsets = {0.0, ghz_to_angular(0.1)};
  return guess;
}

RVec random_init(const InitSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  if (const auto* pwc = std::get_if<PwcInitSpec>(&spec)) {
    if (pwc->n < 0 || !(pwc->hi >= pwc->lo)) throw DomainError("invalid PWC init range");
    std::uniform_real_distribution<double> dist(pwc->lo, pwc->hi);
    RVec v(pwc->n);
    for (auto& x : v) x = dist(rng);
    return v;
  }
  const auto& f = std::get<FourierInitSpec>(spec);
  if (f.components < 1 || f.n_controls < 1) throw DimensionError("Fourier init needs components");
  const double amp = f.bound / f.components;
  std::uniform_real_distribution<double> a_dist(-amp, amp);
  std::uniform_real_distribution<double> w_dist(0.0, f.omega_max);
  std::uniform_real_distribution<double> p_dist(0.0, kTwoPi);
  RVec v(3 * f.components * f.n_controls);
  for (Eigen::Index i = 0; i < v.size(); i += 3) {
    v[i] = a_dist(rng);
    v[i + 1] = w_dist(rng);
    v[i + 2] = p_dist(rng);
  }
  return v;
}

}  // namespace crgate::controls
