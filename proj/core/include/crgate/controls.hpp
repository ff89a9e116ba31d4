#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "crgate/model.hpp"
#include "crgate/types.hpp"

namespace crgate::controls {

/// Piecewise-constant controls. Row j of `amplitudes` holds the values of every
/// control on slice j (rad/ns).
struct PwcPulse {
  std::vector<double> durations;
  RMat amplitudes;
  std::optional<double> bound;
  double lead_buffer = 0.0;
  double trail_buffer = 0.0;

  /// `slices` equal slices of length T / slices, all amplitudes zero.
  static PwcPulse uniform(double duration, int slices, int n_controls);

  int n_slices() const { return static_cast<int>(durations.size()); }
  int n_controls() const { return static_cast<int>(amplitudes.cols()); }
  double duration() const;
  bool is_uniform(double tol = 1e-12) const;
  /// Start time of every slice.
  std::vector<double> slice_starts() const;
  std::vector<double> slice_midpoints() const;

  /// Slice containing t. A time on an interior boundary belongs to the later
  /// slice; t = T belongs to the last slice.
  int slice_at(double t) const;
  RVec eval(double t) const;

  /// Checks slice/amplitude shapes, the bound, and that buffer slices are zero.
  void validate() const;
};

struct FilterSpec {
  double sigma = 0.4;    // ns
  double dt_fine = 0.2;  // ns

  void validate() const;  // sigma > 0, dt_fine > 0, dt_fine <= sigma / 4
};

/// Normalized Gaussian kernel sampled at multiples of `step`, truncated at +-5 sigma.
/// Convolution uses zero padding and returns a sequence of the input length; the
/// resulting linear map is symmetric.
class GaussianKernel {
 public:
  GaussianKernel(double sigma, double step);

  RVec apply(const RVec& samples) const;
  const RVec& taps() const { return taps_; }
  int half_width() const { return half_width_; }

 private:
  RVec taps_;
  int half_width_ = 0;
};

/// Samples the staircase at fine-slice midpoints on [0, T] with step dt_fine and
/// convolves each control with the Gaussian kernel. Throws ResolutionError when
/// dt_fine > sigma / 4.
PwcPulse gaussian_filter(const PwcPulse& pulse, const FilterSpec& spec);

/// Gaussian transfer function exp(-(2 pi nu)^2 sigma^2 / 2) at frequency nu (GHz).
double gaussian_transfer(double sigma, double nu_ghz);

// ---------------------------------------------------------------------------
// Analytic controls: every parameter drives exactly one control operator.

class AnalyticControls {
 public:
  virtual ~AnalyticControls() = default;

  virtual int n_controls() const = 0;
  virtual int n_params() const = 0;
  virtual double duration() const = 0;
  /// Interior times at which the controls may be discontinuous.
  virtual std::vector<double> breakpoints() const { return {}; }

  virtual void eval(double t, RVec& amplitudes) const = 0;
  /// Writes d c_{owner(p)}(t) / d p for every parameter p.
  virtual void param_grad(double t, RVec& partials) const = 0;
  virtual int owner(int param) const = 0;

  virtual RVec params() const = 0;
  virtual void set_params(const RVec& params) = 0;
};

struct FourierComponent {
  double amplitude = 0.0;  // rad/ns
  double omega = 0.0;      // rad/ns
  double phase = 0.0;      // rad
};

/// Bounded Fourier series per control:
///   c_k(t) = B tanh(sum_j A cos(w t + phi) / B) * W(t),
///   W(t) = s((t - t_r) / tau) s((T - t_r - t) / tau), s(x) = 1 / (1 + e^-x).
/// Parameters are flattened control by control, component by component, as (A, w, phi).
class FourierAnsatz final : public AnalyticControls {
 public:
  FourierAnsatz(std::vector<std::vector<FourierComponent>> components, double bound,
                double duration, double ramp_offset = 2.0, double edge_time = 0.25);

  int n_controls() const override { return static_cast<int>(components_.size()); }
  int n_params() const override { return 3 * n_components(); }
  double duration() const override { return duration_; }
  void eval(double t, RVec& amplitudes) const override;
  void param_grad(double t, RVec& partials) const override;
  int owner(int param) const override;
  RVec params() const override;
  void set_params(const RVec& params) override;

  RVec eval(double t) const;
  double window(double t) const;
  /// Unsaturated series sum_j A cos(w t + phi) for control k.
  double raw(int control, double t) const;

  int n_components() const;
  const std::vector<std::vector<FourierComponent>>& components() const { return components_; }
  double bound() const { return bound_; }
  double ramp_offset() const { return ramp_offset_; }
  double edge_time() const { return edge_time_; }

  /// Copy with one component removed.
  FourierAnsatz without(int control, int component) const;

 private:
  void check_time(double t) const;

  std::vector<std::vector<FourierComponent>> components_;
  std::vector<int> offsets_;  // first parameter of each control
  double bound_;
  double duration_;
  double ramp_offset_;
  double edge_time_;
};

/// PWC pulse viewed as analytic controls; parameter k * M + j is c_{j,k}.
class StaircaseControls final : public AnalyticControls {
 public:
  explicit StaircaseControls(PwcPulse pulse);

  int n_controls() const override { return pulse_.n_controls(); }
  int n_params() const override { return static_cast<int>(pulse_.amplitudes.size()); }
  double duration() const override { return pulse_.duration(); }
  std::vector<double> breakpoints() const override;
  void eval(double t, RVec& amplitudes) const override;
  void param_grad(double t, RVec& partials) const override;
  int owner(int param) const override { return param / pulse_.n_slices(); }
  RVec params() const override;
  void set_params(const RVec& params) override;

  const PwcPulse& pulse() const { return pulse_; }

 private:
  PwcPulse pulse_;
};

/// Appends the static offsets (f_1, f_2) as two constant controls and two
/// parameters; pair with HamiltonianSet::with_offset_controls().
class WithStaticOffsets final : public AnalyticControls {
 public:
  WithStaticOffsets(std::shared_ptr<AnalyticControls> base, std::array<double, 2> offsets);

  int n_controls() const override { return base_->n_controls() + 2; }
  int n_params() const override { return base_->n_params() + 2; }
  double duration() const override { return base_->duration(); }
  std::vector<double> breakpoints() const override { return base_->breakpoints(); }
  void eval(double t, RVec& amplitudes) const override;
  void param_grad(double t, RVec& partials) const override;
  int owner(int param) const override;
  RVec params() const override;
  void set_params(const RVec& params) override;

  const AnalyticControls& base() const { return *base_; }
  std::array<double, 2> offsets() const { return offsets_; }

 private:
  std::shared_ptr<AnalyticControls> base_;
  std::array<double, 2> offsets_;
};

// ---------------------------------------------------------------------------
// Linear maps from coarse AWG pixels to the fine propagation grid.

/// Upsamples pixel values onto the fine grid, optionally applies the Gaussian
/// filter, and returns one value per fine slice. Pixels cover the active
/// window [lead, T - trail]; buffers are held at zero. When the fine step is
/// coarser than sigma / 4 the convolution runs on an integer subdivision of the
/// fine grid and is averaged back per fine slice.
class PixelChannel {
 public:
  PixelChannel(double duration, double pixel, double dt_fine, double lead, double trail,
               std::optional<double> sigma);

  int n_pixels() const { return n_pixels_; }
  int n_fine() const { return n_fine_; }
  double dt_fine() const { return dt_fine_; }
  double duration() const { return duration_; }
  int subdivision() const { return sub_; }
  /// Centre time of pixel i.
  double pixel_center(int i) const {
    return (lead_fine_ + (i + 0.5) * fine_per_pixel_) * dt_fine_;
  }

  RVec forward(const RVec& pixels) const;
  /// Transpose of forward().
  RVec adjoint(const RVec& fine) const;

 private:
  RVec to_sub_grid(const RVec& pixels) const;

  double duration_, pixel_, dt_fine_;
  int n_fine_ = 0, n_pixels_ = 0, lead_fine_ = 0, sub_ = 1;
  int fine_per_pixel_ = 1;
  std::optional<GaussianKernel> kernel_;
};

/// Linear (per control) map from a flat parameter vector to fine-grid controls.
class ControlMap {
 public:
  virtual ~ControlMap() = default;
  virtual int n_params() const = 0;
  virtual int n_controls() const = 0;
  virtual int n_fine() const = 0;
  virtual double dt_fine() const = 0;
  /// Returns an n_fine x n_controls amplitude matrix.
  virtual RMat forward(const RVec& params) const = 0;
  /// Pulls back a gradient with respect to the fine amplitudes.
  virtual RVec adjoint(const RMat& fine_gradient) const = 0;

  PwcPulse to_pulse(const RVec& params) const;
};

/// Fine slices are the parameters (unconstrained GRAPE).
class DirectMap final : public ControlMap {
 public:
  DirectMap(double duration, int slices, int n_controls);
  int n_params() const override { return slices_ * controls_; }
  int n_controls() const override { return controls_; }
  int n_fine() const override { return slices_; }
  double dt_fine() const override { return duration_ / slices_; }
  RMat forward(const RVec& params) const override;
  RVec adjoint(const RMat& fine_gradient) const override;

 private:
  double duration_;
  int slices_, controls_;
};

/// Each control is an independent filtered pixel channel. Parameters are
/// ordered control-major: p = k * n_pixels + pixel.
class FilteredPwcMap final : public ControlMap {
 public:
  FilteredPwcMap(PixelChannel channel, int n_controls);
  int n_params() const override { return channel_.n_pixels() * controls_; }
  int n_controls() const override { return controls_; }
  int n_fine() const override { return channel_.n_fine(); }
  double dt_fine() const override { return channel_.dt_fine(); }
  RMat forward(const RVec& params) const override;
  RVec adjoint(const RMat& fine_gradient) const override;
  const PixelChannel& channel() const { return channel_; }

 private:
  PixelChannel channel_;
  int controls_;
};

/// Carrier angular frequencies for the two-carrier scheme: delta + g on the
/// transmon 1 lines, delta - g on the transmon 2 lines, delta = delta_2 + f_2.
struct CarrierFrequencies {
  double plus = 0.0;
  double minus = 0.0;
};
CarrierFrequencies two_carrier_frequencies(const model::DeviceParams& params);

/// Eight envelopes, ordered (x'1, x''1, y'1, y''1, x'2, x''2, y'2, y''2); controls
///   X1 = x'1 + cos(w+ t) x''1,  Y1 = y'1 + cos(w+ t) y''1,
///   X2 = x'2 + cos(w- t) x''2,  Y2 = y'2 + cos(w- t) y''2,
/// with envelopes filtered before modulation and modulation evaluated at
/// fine-slice midpoints.
class TwoCarrierMap final : public ControlMap {
 public:
  TwoCarrierMap(PixelChannel channel, CarrierFrequencies carriers);
  int n_params() const override { return channel_.n_pixels() * 8; }
  int n_controls() const override { return 4; }
  int n_fine() const override { return channel_.n_fine(); }
  double dt_fine() const override { return channel_.dt_fine(); }
  RMat forward(const RVec& params) const override;
  RVec adjoint(const RMat& fine_gradient) const override;
  const PixelChannel& channel() const { return channel_; }
  const CarrierFrequencies& carriers() const { return carriers_; }

 private:
  PixelChannel channel_;
  CarrierFrequencies carriers_;
  RMat modulation_;  // n_fine x 4
};

/// Eight PWC envelopes plus carriers and filter. Envelopes are coarse pixel
/// pulses on [0, T] (8 columns in TwoCarrierMap order).
struct TwoCarrierPulse {
  PwcPulse envelopes;
  CarrierFrequencies carriers;
  FilterSpec filter;

  /// Filtered envelopes on the fine grid (8 columns).
  PwcPulse filtered_envelopes() const;
  /// The four assembled controls at time t, modulation evaluated exactly at t.
  RVec assemble(double t) const;
  /// Assembled controls on the fine grid, modulation at slice midpoints.
  PwcPulse to_controls() const;
};

// ---------------------------------------------------------------------------
// Initial guesses.

struct CrGuess {
  PwcPulse pulse;  // X1, Y1, X2, Y2
  std::array<double, 2> offsets{};
};

/// Gaussian cross-resonance drive on the transmon 2 X line with a DRAG-like Y
/// quadrature: X2 = 2 pi 0.4 exp(-(t - T/2)^2 / (2 (T/4)^2)), Y2 = dX2/dt / delta_2,
/// f = (0, 2 pi 0.1). Sampled at slice midpoints of `slices` equal slices.
CrGuess initial_guess_cr(const model::DeviceParams& params, double duration, int slices);
double cr_guess_x2(double t, double duration);
double cr_guess_y2(double t, double duration, double delta2);

struct PwcInitSpec {
  int n = 0;
  double lo = -1.0;
  double hi = 1.0;
};

struct FourierInitSpec {
  int n_controls = 4;
  int components = 1;  // per control
  double bound = 1.0;
  double omega_max = 1.0;
};

using InitSpec = std::variant<PwcInitSpec, FourierInitSpec>;

/// Deterministic draw given the seed. Fourier draws follow the FourierAnsatz
/// parameter order (A in [-B/m, B/m], w in [0, w_max], phi in [0, 2 pi)).
RVec random_init(const InitSpec& spec, std::uint64_t seed);

}  // namespace crgate::controls
