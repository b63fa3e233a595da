#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "thermolio/common.hpp"

namespace thermolio {

// 2018 SI exact values.
inline constexpr double kPlanck = 6.62607015e-34;       // J s
inline constexpr double kSpeedOfLight = 299792458.0;    // m/s
inline constexpr double kBoltzmann = 1.380649e-23;      // J/K

inline double celsius_to_kelvin(double c) { return c + 273.15; }
inline double kelvin_to_celsius(double k) { return k - 273.15; }

struct SpectralBand {
  double lambda_min = 8e-6;   // meters
  double lambda_max = 14e-6;  // meters
};

// Planck spectral radiance, W m^-2 sr^-1 per meter of wavelength.
inline double planck_spectral_radiance(double lambda, double temperature_k) {
  const double c1 = 2.0 * kPlanck * kSpeedOfLight * kSpeedOfLight;
  const double x = kPlanck * kSpeedOfLight / (lambda * kBoltzmann * temperature_k);
  return c1 / (std::pow(lambda, 5) * std::expm1(x));
}

// Band-integrated radiance (flat spectral response), composite Simpson rule.
// Strictly increasing in T.
inline double band_radiance(double temperature_k, const SpectralBand& band,
                            int panels = 4096) {
  if (temperature_k <= 0.0) {
    throw std::invalid_argument("band_radiance: temperature must be positive");
  }
  if (!(band.lambda_min > 0.0) || !(band.lambda_max > band.lambda_min)) {
    throw std::invalid_argument("band_radiance: invalid spectral band");
  }
  const int n = 2 * std::max(1, panels / 2);  // even interval count
  const double h = (band.lambda_max - band.lambda_min) / n;
  double sum = planck_spectral_radiance(band.lambda_min, temperature_k) +
               planck_spectral_radiance(band.lambda_max, temperature_k);
  for (int i = 1; i < n; ++i) {
    const double lambda = band.lambda_min + i * h;
    sum += (i % 2 == 1 ? 4.0 : 2.0) * planck_spectral_radiance(lambda, temperature_k);
  }
  return sum * h / 3.0;
}

struct CalibrationPoint {
  double temperature_k = 0.0;
  double mean_dn = 0.0;
};

// DN = K * L(T) + B over a spectral band, valid on [t_min_k, t_max_k].
struct RadiometricModel {
  double responsivity = 0.0;  // K, DN per W m^-2 sr^-1
  double offset = 0.0;        // B, DN
  SpectralBand band;
  double t_min_k = 0.0;
  double t_max_k = 0.0;
};

struct RadiometricFitReport {
  double residual_rms = 0.0;
  std::vector<double> residuals;  // DN, per input point
};

inline double temperature_to_dn(double temperature_k, const RadiometricModel& model) {
  return model.responsivity * band_radiance(temperature_k, model.band) + model.offset;
}

// Linear least squares for (K, B) against band radiance.
inline RadiometricModel fit_radiometric_model(const std::vector<CalibrationPoint>& points,
                                              const SpectralBand& band,
                                              RadiometricFitReport* report = nullptr) {
  if (points.size() < 2) {
    throw ValidationError("fit_radiometric_model: need at least 2 calibration points");
  }
  double t_min = points.front().temperature_k;
  double t_max = t_min;
  std::vector<double> radiances(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].temperature_k <= 0.0) {
      throw ValidationError("fit_radiometric_model: non-positive temperature");
    }
    radiances[i] = band_radiance(points[i].temperature_k, band);
    t_min = std::min(t_min, points[i].temperature_k);
    t_max = std::max(t_max, points[i].temperature_k);
  }

  // Normal equations of DN = K*L + B.
  const double n = static_cast<double>(points.size());
  double sum_l = 0.0, sum_ll = 0.0, sum_dn = 0.0, sum_ldn = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    sum_l += radiances[i];
    sum_ll += radiances[i] * radiances[i];
    sum_dn += points[i].mean_dn;
    sum_ldn += radiances[i] * points[i].mean_dn;
  }
  const double det = n * sum_ll - sum_l * sum_l;
  const double scale = n * sum_ll;
  if (!(det > 1e-12 * std::max(scale, 1.0))) {
    throw SolverError("fit_radiometric_model: singular fit (temperatures not distinct)");
  }
  RadiometricModel model;
  model.band = band;
  model.responsivity = (n * sum_ldn - sum_l * sum_dn) / det;
  model.offset = (sum_dn - model.responsivity * sum_l) / n;
  model.t_min_k = t_min;
  model.t_max_k = t_max;
  if (!(model.responsivity > 0.0)) {
    throw SolverError("fit_radiometric_model: non-positive responsivity");
  }
  if (report) {
    report->residuals.resize(points.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double r = points[i].mean_dn -
                       (model.responsivity * radiances[i] + model.offset);
      report->residuals[i] = r;
      ss += r * r;
    }
    report->residual_rms = std::sqrt(ss / n);
  }
  return model;
}

// Invert DN -> T by bisection on the monotone forward model. The valid range
// is extended by a fixed margin on both sides.
inline double dn_to_temperature(double dn, const RadiometricModel& model,
                                double margin_k = 5.0, double tol_k = 1e-3) {
  double lo = model.t_min_k - margin_k;
  double hi = model.t_max_k + margin_k;
  const double dn_lo = temperature_to_dn(lo, model);
  const double dn_hi = temperature_to_dn(hi, model);
  if (dn < dn_lo) {
    throw RangeError("dn_to_temperature: DN " + std::to_string(dn) +
                     " below model range (min DN " + std::to_string(dn_lo) +
                     " at " + std::to_string(lo) + " K)");
  }
  if (dn > dn_hi) {
    throw RangeError("dn_to_temperature: DN " + std::to_string(dn) +
                     " above model range (max DN " + std::to_string(dn_hi) +
                     " at " + std::to_string(hi) + " K)");
  }
  while (hi - lo > tol_k) {
    const double mid = 0.5 * (lo + hi);
    if (temperature_to_dn(mid, model) < dn) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Dense tabulation of the forward model for per-point inversion in the fusion
// path. Agrees with dn_to_temperature to well under its bisection tolerance.
class DnTemperatureTable {
 public:
  DnTemperatureTable() = default;

  explicit DnTemperatureTable(const RadiometricModel& model, double margin_k = 5.0,
                              int samples = 4096)
      : t_lo_(model.t_min_k - margin_k), t_hi_(model.t_max_k + margin_k) {
    dn_.resize(samples);
    const double dt = (t_hi_ - t_lo_) / (samples - 1);
    for (int i = 0; i < samples; ++i) {
      dn_[i] = temperature_to_dn(t_lo_ + i * dt, model);
    }
  }

  bool in_range(double dn) const {
    return !dn_.empty() && dn >= dn_.front() && dn <= dn_.back();
  }

  double temperature_k(double dn) const {
    if (!in_range(dn)) {
      throw RangeError("DnTemperatureTable: DN outside tabulated range");
    }
    const auto it = std::lower_bound(dn_.begin(), dn_.end(), dn);
    std::size_t i = static_cast<std::size_t>(it - dn_.begin());
    if (i == 0) i = 1;
    const double dt = (t_hi_ - t_lo_) / (dn_.size() - 1);
    const double f = (dn - dn_[i - 1]) / (dn_[i] - dn_[i - 1]);
    return t_lo_ + dt * (static_cast<double>(i - 1) + f);
  }

 private:
  double t_lo_ = 0.0;
  double t_hi_ = 0.0;
  std::vector<double> dn_;
};

}  // namespace thermolio
