#pragma once

// Least-squares model fits used in the analysis: the central coincidence peak
// against the jitter-convolved averaged correlation, and Voigt line shapes
// against sampled spectra. Both run MINPACK's Levenberg-Marquardt (Eigen's
// unsupported port) with forward-difference Jacobians.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "hom/analytic.hpp"
#include "hom/errors.hpp"
#include "hom/histogram.hpp"

namespace hom {

namespace detail {

/// Adapter from a residual callback to the functor shape MINPACK expects.
template <class F>
struct LeastSquaresFunctor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  const F* f;
  int n_in;
  int n_out;

  int inputs() const { return n_in; }
  int values() const { return n_out; }
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
    out = (*f)(x);
    return 0;
  }
};

struct LmOutcome {
  Eigen::VectorXd x;
  int status = 0;
  int evaluations = 0;
};

inline const char* lm_status_text(int status) {
  switch (status) {
    case 0: return "improper input parameters";
    case 1: return "relative reduction too small";
    case 2: return "relative error too small";
    case 3: return "relative error and reduction too small";
    case 4: return "cosinus too small";
    case 5: return "too many function evaluations";
    case 6: return "ftol too small";
    case 7: return "xtol too small";
    case 8: return "gtol too small";
    default: return "unknown";
  }
}

/// Runs LM from x0. Statuses 1-4 are convergence; 6-8 mean the tolerances
/// cannot be met in double precision, which also leaves x at the optimum.
/// Anything else throws with the status and the last parameters.
template <class F>
LmOutcome levenberg_marquardt(const F& residuals, Eigen::VectorXd x0, int n_values, int max_evaluations,
                              const char* what) {
  using Functor = LeastSquaresFunctor<F>;
  Functor functor{&residuals, static_cast<int>(x0.size()), n_values};
  Eigen::NumericalDiff<Functor> numdiff(functor);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<Functor>> lm(numdiff);
  lm.parameters.maxfev = max_evaluations;
  lm.parameters.ftol = 1e-12;
  lm.parameters.xtol = 1e-12;
  const int status = static_cast<int>(lm.minimize(x0));
  LmOutcome out{x0, status, static_cast<int>(lm.nfev)};
  if (status < 1 || status == 5 || !x0.allFinite()) {
    std::string msg = std::string(what) + " did not converge: " + lm_status_text(status) + " after " +
                      std::to_string(lm.nfev) + " evaluations, parameters [";
    for (Eigen::Index i = 0; i < x0.size(); ++i) msg += (i ? ", " : "") + std::to_string(x0[i]);
    throw NumericalError(msg + "]");
  }
  return out;
}

/// Jacobian by forward or central differences, step relative to |x|.
template <class F>
Eigen::MatrixXd finite_difference_jacobian(const F& residuals, const Eigen::VectorXd& x, bool central) {
  const Eigen::VectorXd r0 = residuals(x);
  Eigen::MatrixXd J(r0.size(), x.size());
  const double rel = central ? std::cbrt(std::numeric_limits<double>::epsilon())
                             : std::sqrt(std::numeric_limits<double>::epsilon());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = rel * std::max(1.0, std::abs(x[j]));
    Eigen::VectorXd xp = x;
    xp[j] += h;
    if (central) {
      Eigen::VectorXd xm = x;
      xm[j] -= h;
      J.col(j) = (residuals(xp) - residuals(xm)) / (2.0 * h);
    } else {
      J.col(j) = (residuals(xp) - r0) / h;
    }
  }
  return J;
}

/// (J^T J)^-1, with infinities on the diagonal for directions the data do
/// not constrain.
inline Eigen::MatrixXd covariance_from_jacobian(const Eigen::MatrixXd& J) {
  const Eigen::MatrixXd JtJ = J.transpose() * J;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(JtJ);
  lu.setThreshold(1e-13);
  if (lu.isInvertible()) return lu.inverse();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(JtJ.rows(), JtJ.cols());
  cov.diagonal().setConstant(std::numeric_limits<double>::infinity());
  return cov;
}

}  // namespace detail

// -- central-peak fit ----------------------------------------------------------

struct G2FitOptions {
  double half_range = 3e-9;    // s, bins inside [-half_range, half_range] are fitted
  double jitter_fwhm = 0.0;    // s, FWHM of the lag response (both detectors combined)
  double center_offset = 0.0;  // s, lag of the peak center
  // Also fit the weight of the beat term (1 for the model, 0 for distinguishable photons).
  bool free_interference_weight = false;
  // The averaged correlation is even in the detuning, so the data fix only
  // |delta_nu|; the sign of this hint is applied to the result.
  double sign_hint = 1.0;
  double max_detuning = 15e9;  // Hz, extent of the starting-point scan
  double scan_step = 0.05e9;   // Hz
  int max_evaluations = 2000;
};

struct G2FitResult {
  double delta_nu = 0.0;  // Hz, signed with the hint
  double delta_nu_error = 0.0;
  double amplitude = 0.0;  // pulse pairs; the bare peak area is amplitude / 2
  double amplitude_error = 0.0;
  double interference_weight = 1.0;
  double interference_weight_error = 0.0;  // 0 when the weight is held at 1
  double chi2 = 0.0;
  int dof = 0;
  double chi2_dof = 0.0;
  int evaluations = 0;
  int status = 0;
  int bins = 0;
  Eigen::MatrixXd covariance;  // physical units, order (amplitude, delta_nu[, weight])
};

/// Central-peak model  amplitude * (B_i - weight * C_i(delta_nu)),  with
///   B(tau) = (e^{-|tau|/tau_1} + e^{-|tau|/tau_2}) / (4 (tau_1 + tau_2))
///   C(tau) = 2 e^{-|tau|/2T - 2 pi^2 Sigma^2 tau^2} cos(2 pi delta_nu tau) / (4 (tau_1 + tau_2))
/// evaluated on a 1 ps grid, convolved with the Gaussian lag response and
/// summed into the histogram bins.
///
/// Parameters are scaled for the optimizer: (amplitude / amplitude_scale,
/// delta_nu in GHz[, weight]).
class G2CenterModel {
 public:
  G2CenterModel(const RealHistogram& hist, const AnalyticPair& fixed, const G2FitOptions& opt)
      : pair_(fixed), opt_(opt) {
    fixed.validate();
    if (!(opt.half_range > 0.0)) throw ConfigError("fit.half_range", "must be > 0");
    if (!(opt.jitter_fwhm >= 0.0)) throw ConfigError("fit.jitter_fwhm", "must be >= 0");
    if (!(opt.scan_step > 0.0) || !(opt.max_detuning >= 0.0)) throw ConfigError("fit.scan", "bad detuning scan");

    const double w = static_cast<double>(hist.bin_width_ps);
    const double c = opt.center_offset * 1e12;
    const double h = opt.half_range * 1e12;
    for (std::size_t i = 0; i < hist.size(); ++i) {
      const double lo = static_cast<double>(hist.lower_ps(i));
      if (lo < c - h || lo + w > c + h) continue;
      bins_.push_back(i);
      data_.push_back(hist.counts[i]);
      variance_.push_back(hist.variance_at(i));
    }
    if (bins_.size() < 4) throw ConfigError("fit.half_range", "covers fewer than 4 histogram bins");
    bin_width_ps_ = hist.bin_width_ps;

    int above = 0;
    for (std::size_t k = 0; k < data_.size(); ++k)
      if (data_[k] > 2.0 * std::sqrt(std::max(variance_[k], 1.0))) ++above;
    if (above < 20)
      throw NumericalError("central peak has " + std::to_string(above) + " bins above noise, at least 20 needed");

    // Fine grid of 1 ps cells covering the fitted bins plus the kernel reach.
    const double sigma_ps = opt.jitter_fwhm * 1e12 / fwhm_per_sigma;
    if (sigma_ps > 1e-3) {
      kernel_half_ = static_cast<int>(std::ceil(8.0 * sigma_ps)) + 1;
      kernel_.resize(2 * kernel_half_ + 1);
      double norm = 0.0;
      for (int m = -kernel_half_; m <= kernel_half_; ++m)
        norm += kernel_[m + kernel_half_] = detail::gaussian_bin_weight(m, sigma_ps);
      for (double& k : kernel_) k /= norm;
    }
    fine_start_ps_ = hist.lower_ps(bins_.front()) - kernel_half_;
    const auto n_fine = static_cast<std::size_t>(bins_.size()) * static_cast<std::size_t>(bin_width_ps_) +
                        2 * static_cast<std::size_t>(kernel_half_);
    lag_.resize(n_fine);
    envelope_.resize(n_fine);
    std::vector<double> base(n_fine);
    const double pi = std::numbers::pi;
    const double norm = 1e-12 / (4.0 * (pair_.tau_1 + pair_.tau_2));  // density * 1 ps
    const double S = pair_.Sigma();
    for (std::size_t k = 0; k < n_fine; ++k) {
      const double t = (static_cast<double>(fine_start_ps_) + 0.5 + static_cast<double>(k) - c) * 1e-12;
      const double a = std::abs(t);
      lag_[k] = t;
      base[k] = norm * (std::exp(-a / pair_.tau_1) + std::exp(-a / pair_.tau_2));
      envelope_[k] = 2.0 * norm * std::exp(-a / (2.0 * pair_.T()) - 2.0 * pi * pi * S * S * t * t);
    }
    base_ = to_bins(base);
    sigma_.assign(data_.size(), 1.0);
    for (std::size_t k = 0; k < data_.size(); ++k) sigma_[k] = std::sqrt(std::max(variance_[k], 1.0));
    double area = 0.0, model_area = 0.0;
    for (std::size_t k = 0; k < data_.size(); ++k) {
      area += data_[k];
      model_area += base_[k];
    }
    amplitude_scale_ = std::max(area / std::max(model_area, 1e-300), 1.0);
  }

  std::size_t bins() const { return bins_.size(); }
  int parameters() const { return opt_.free_interference_weight ? 3 : 2; }
  double amplitude_scale() const { return amplitude_scale_; }
  const std::vector<double>& data() const { return data_; }
  const std::vector<double>& sigma() const { return sigma_; }

  /// Per-bin base term B_i (unit amplitude).
  const std::vector<double>& base() const { return base_; }

  /// Per-bin beat term C_i for the given detuning (unit amplitude).
  std::vector<double> beat(double delta_nu) const {
    std::vector<double> fine(lag_.size());
    const double f = 2.0 * std::numbers::pi * delta_nu;
    for (std::size_t k = 0; k < lag_.size(); ++k) fine[k] = envelope_[k] * std::cos(f * lag_[k]);
    return to_bins(fine);
  }

  std::vector<double> predict(double amplitude, double delta_nu, double weight) const {
    const auto c = beat(delta_nu);
    std::vector<double> m(bins());
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = amplitude * (base_[k] - weight * c[k]);
    return m;
  }

  /// Normalized residuals (data - model) / sigma for scaled parameters.
  Eigen::VectorXd operator()(const Eigen::VectorXd& p) const {
    const double weight = opt_.free_interference_weight ? p[2] : 1.0;
    const auto m = predict(p[0] * amplitude_scale_, p[1] * 1e9, weight);
    Eigen::VectorXd r(static_cast<Eigen::Index>(m.size()));
    for (std::size_t k = 0; k < m.size(); ++k) r[static_cast<Eigen::Index>(k)] = (data_[k] - m[k]) / sigma_[k];
    return r;
  }

  /// Replaces the weights by the expected raw counts under `model`: the model
  /// plus whatever the histogram variance carries beyond its counts (the
  /// subtracted background).
  void reweight(const std::vector<double>& model) {
    for (std::size_t k = 0; k < data_.size(); ++k)
      sigma_[k] = std::sqrt(std::max(model[k] + variance_[k] - data_[k], 1.0));
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& p, bool central) const {
    return detail::finite_difference_jacobian(*this, p, central);
  }

 private:
  std::vector<double> to_bins(const std::vector<double>& fine) const {
    const std::size_t inner = fine.size() - 2 * static_cast<std::size_t>(kernel_half_);
    std::vector<double> smoothed(inner);
    if (kernel_.empty()) {
      std::copy(fine.begin(), fine.end(), smoothed.begin());
    } else {
      for (std::size_t k = 0; k < inner; ++k) {
        double s = 0.0;
        const double* src = fine.data() + k;  // fine[k + kernel_half_ + m] for m in [-half, half]
        for (std::size_t m = 0; m < kernel_.size(); ++m) s += kernel_[m] * src[m];
        smoothed[k] = s;
      }
    }
    std::vector<double> out(bins_.size(), 0.0);
    const auto w = static_cast<std::size_t>(bin_width_ps_);
    for (std::size_t b = 0; b < out.size(); ++b)
      for (std::size_t k = 0; k < w; ++k) out[b] += smoothed[b * w + k];
    return out;
  }

  AnalyticPair pair_;
  G2FitOptions opt_;
  std::vector<std::size_t> bins_;
  std::int64_t bin_width_ps_ = 1;
  std::vector<double> data_, variance_, sigma_;
  std::int64_t fine_start_ps_ = 0;
  int kernel_half_ = 0;
  std::vector<double> kernel_;
  std::vector<double> lag_, envelope_, base_;
  double amplitude_scale_ = 1.0;
};

namespace detail {

/// Weighted linear least squares of data against a * (B - w C) with w fixed
/// at 1, or against a B - b C with both free. Returns {chi2, a, w}.
inline std::array<double, 3> linear_g2_solve(const G2CenterModel& model, const std::vector<double>& c, bool free_w) {
  const auto& y = model.data();
  const auto& s = model.sigma();
  const auto& B = model.base();
  if (!free_w) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double f = (B[k] - c[k]) / (s[k] * s[k]);
      num += f * y[k];
      den += f * (B[k] - c[k]);
    }
    const double a = den > 0.0 ? num / den : 0.0;
    double chi2 = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) chi2 += std::pow((y[k] - a * (B[k] - c[k])) / s[k], 2);
    return {chi2, a, 1.0};
  }
  Eigen::Matrix2d M = Eigen::Matrix2d::Zero();
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double iw = 1.0 / (s[k] * s[k]);
    const Eigen::Vector2d g(B[k], -c[k]);
    M += iw * g * g.transpose();
    v += iw * g * y[k];
  }
  const Eigen::Vector2d ab = M.ldlt().solve(v);
  double chi2 = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) chi2 += std::pow((y[k] - ab[0] * B[k] + ab[1] * c[k]) / s[k], 2);
  const double w = ab[0] != 0.0 ? ab[1] / ab[0] : 0.0;
  return {chi2, ab[0], w};
}

}  // namespace detail

/// Fits detuning and amplitude (and optionally the beat weight) of the
/// central peak with lifetimes and Sigma fixed. A scan over |delta_nu| with
/// the amplitude solved linearly picks the starting point; LM then refines
/// it twice, the second time with weights from the first solution.
/// Reported errors are from (J^T J)^-1 with a central-difference Jacobian.
template <class T>
G2FitResult fit_g2_center(const BasicHistogram<T>& hist, const AnalyticPair& fixed, const G2FitOptions& opt = {}) {
  const RealHistogram real = [&] {
    if constexpr (std::is_same_v<T, double>) return hist;
    else return to_real(hist);
  }();
  G2CenterModel model(real, fixed, opt);
  const bool free_w = opt.free_interference_weight;

  double best_chi2 = std::numeric_limits<double>::infinity(), best_nu = 0.0, best_a = 1.0, best_w = 1.0;
  const int steps = static_cast<int>(std::floor(opt.max_detuning / opt.scan_step));
  for (int k = 0; k <= steps; ++k) {
    const double nu = k * opt.scan_step;
    const auto [chi2, a, w] = detail::linear_g2_solve(model, model.beat(nu), free_w);
    if (chi2 < best_chi2) {
      best_chi2 = chi2;
      best_nu = nu;
      best_a = a;
      best_w = w;
    }
  }

  Eigen::VectorXd x(model.parameters());
  x[0] = std::max(best_a, 1e-300) / model.amplitude_scale();
  x[1] = best_nu * 1e-9;
  if (free_w) x[2] = best_w;
  model.reweight(model.predict(best_a, best_nu, best_w));

  detail::LmOutcome lm;
  int evaluations = 0;
  for (int pass = 0; pass < 2; ++pass) {
    lm = detail::levenberg_marquardt(model, x, static_cast<int>(model.bins()), opt.max_evaluations,
                                     "fit_g2_center");
    evaluations += lm.evaluations;
    x = lm.x;
    model.reweight(model.predict(x[0] * model.amplitude_scale(), x[1] * 1e9, free_w ? x[2] : 1.0));
  }

  const Eigen::VectorXd r = model(x);
  const Eigen::MatrixXd cov_scaled = detail::covariance_from_jacobian(model.jacobian(x, true));
  Eigen::VectorXd scale(model.parameters());
  scale[0] = model.amplitude_scale();
  scale[1] = 1e9;
  if (free_w) scale[2] = 1.0;

  G2FitResult out;
  out.covariance = scale.asDiagonal() * cov_scaled * scale.asDiagonal();
  out.amplitude = x[0] * scale[0];
  out.amplitude_error = std::sqrt(out.covariance(0, 0));
  out.delta_nu = std::copysign(std::abs(x[1]) * 1e9, opt.sign_hint);
  out.delta_nu_error = std::sqrt(out.covariance(1, 1));
  if (free_w) {
    out.interference_weight = x[2];
    out.interference_weight_error = std::sqrt(out.covariance(2, 2));
  }
  out.chi2 = r.squaredNorm();
  out.bins = static_cast<int>(model.bins());
  out.dof = out.bins - model.parameters();
  out.chi2_dof = out.dof > 0 ? out.chi2 / out.dof : std::numeric_limits<double>::quiet_NaN();
  out.evaluations = evaluations;
  out.status = lm.status;
  return out;
}

// -- Voigt inference -------------------------------------------------------------

/// Olivero-Longbothum approximation of the Voigt FWHM (about 0.02 % accurate).
inline double voigt_fwhm(double gaussian_fwhm, double lorentz_fwhm) {
  return 0.5346 * lorentz_fwhm + std::sqrt(0.2166 * lorentz_fwhm * lorentz_fwhm + gaussian_fwhm * gaussian_fwhm);
}

struct InhomogeneousFit {
  double fwhm = 0.0;  // Hz, Gaussian component
  double error = 0.0;
  double center = 0.0;  // Hz, same origin as the input
  double area = 0.0;    // intensity * Hz
  double lorentz_fwhm = 0.0;
  double chi2_dof = 0.0;
  bool degenerate = false;  // Gaussian part below what the sampling resolves
};

/// Gaussian FWHM of a sampled line shape from a least-squares Voigt fit with
/// the Lorentzian fixed to FWHM 1/(2 pi lifetime). Free parameters are area,
/// center and Gaussian sigma. The error is the (J^T J)^-1 estimate scaled by
/// the residual variance, since the intensities carry no uncertainties.
inline InhomogeneousFit infer_inhomogeneous(const std::vector<double>& frequency, const std::vector<double>& intensity,
                                            double lifetime) {
  if (!(lifetime > 0.0) || !std::isfinite(lifetime)) throw ConfigError("lifetime", "must be finite and > 0");
  if (frequency.size() != intensity.size()) throw ConfigError("spectrum", "frequency and intensity lengths differ");
  const std::size_t n = frequency.size();
  if (n < 8) throw ConfigError("spectrum", "needs at least 8 samples");
  for (std::size_t i = 1; i < n; ++i)
    if (!(frequency[i] > frequency[i - 1])) throw ConfigError("spectrum", "frequencies must be strictly increasing");

  // Work in GHz about the first sample for conditioning.
  const double origin = frequency[n / 2];
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = (frequency[i] - origin) * 1e-9;
  std::vector<double> steps(n - 1);
  for (std::size_t i = 1; i < n; ++i) steps[i - 1] = f[i] - f[i - 1];
  std::nth_element(steps.begin(), steps.begin() + steps.size() / 2, steps.end());
  const double spacing = steps[steps.size() / 2];

  const double f_l = 1e-9 / (2.0 * std::numbers::pi * lifetime);
  const double hwhm = 0.5 * f_l;

  // Starting point from the sampled peak, its half-maximum width and area.
  const auto peak = static_cast<std::size_t>(std::max_element(intensity.begin(), intensity.end()) - intensity.begin());
  const double ymax = intensity[peak];
  if (!(ymax > 0.0)) throw NumericalError("spectrum has no positive intensity");
  std::size_t lo = peak, hi = peak;
  while (lo > 0 && intensity[lo] > 0.5 * ymax) --lo;
  while (hi + 1 < n && intensity[hi] > 0.5 * ymax) ++hi;
  const double fwhm_v = std::max(f[hi] - f[lo], spacing);
  double area = 0.0;
  for (std::size_t i = 1; i < n; ++i) area += 0.5 * (intensity[i] + intensity[i - 1]) * (f[i] - f[i - 1]);
  const double g0 = std::pow(fwhm_v - 0.5346 * f_l, 2) - 0.2166 * f_l * f_l;
  const double sigma0 = std::max(g0 > 0.0 ? std::sqrt(g0) : 0.0, 0.2 * f_l) / fwhm_per_sigma;
  const double ys = ymax;

  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(n));
    const double s = std::abs(p[2]);
    for (std::size_t i = 0; i < n; ++i)
      r[static_cast<Eigen::Index>(i)] = (intensity[i] - p[0] * area * voigt_profile(f[i] - p[1], s, hwhm)) / ys;
    return r;
  };
  Eigen::VectorXd x(3);
  x << 1.0, f[peak], sigma0;
  const auto lm = detail::levenberg_marquardt(residuals, x, static_cast<int>(n), 4000, "infer_inhomogeneous");
  x = lm.x;

  const Eigen::VectorXd r = residuals(x);
  const double s2 = r.squaredNorm() / static_cast<double>(n - 3);
  const Eigen::MatrixXd cov = s2 * detail::covariance_from_jacobian(detail::finite_difference_jacobian(residuals, x, true));

  InhomogeneousFit out;
  out.lorentz_fwhm = f_l * 1e9;
  out.fwhm = std::abs(x[2]) * fwhm_per_sigma * 1e9;
  out.error = std::sqrt(cov(2, 2)) * fwhm_per_sigma * 1e9;
  out.center = origin + x[1] * 1e9;
  out.area = x[0] * area * 1e9;
  out.chi2_dof = s2;

  const double total = voigt_fwhm(out.fwhm * 1e-9, f_l);
  if (spacing > total / 5.0)
    throw ConfigError("spectrum", "sample spacing " + std::to_string(spacing) + " GHz is coarser than the Voigt FWHM / 5 (" +
                                      std::to_string(total / 5.0) + " GHz)");
  out.degenerate = out.fwhm * 1e-9 < std::max(2.0 * spacing, 0.1 * f_l);
  return out;
}

}  // namespace hom
