#include "pairkit/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pairkit/errors.hpp"

namespace pairkit {

double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

namespace {

// Argument of the sinc in the dip expression, dimensionless:
// 2*pi * dt * dlambda * c / lambda^2 with dt in ps and wavelengths in nm.
double hom_sinc_argument(double delta_t_ps, double center_wavelength_nm, double fwhm_nm) {
  const double dt_s = delta_t_ps * 1e-12;
  const double dl_m = fwhm_nm * 1e-9;
  const double lambda_m = center_wavelength_nm * 1e-9;
  return 2.0 * std::numbers::pi * dt_s * dl_m * kSpeedOfLightMps / (lambda_m * lambda_m);
}

}  // namespace

double hom_dip_rate(double delta_t_ps, const HomDipParams& params) {
  const double x = hom_sinc_argument(delta_t_ps, params.center_wavelength_nm, params.fwhm_nm);
  return params.amplitude * (1.0 - params.visibility * sinc(x));
}

double visibility_bound(const FacetParams& facets) {
  const double r = facets.reflectivity;
  if (r >= 1.0) {
    throw Error(ErrorCode::domain_error, "facet reflectivity must be < 1");
  }
  const double facet_term = r * r / (1.0 - r) * (facets.eta_tm + facets.eta_te);
  return 1.0 / (1.0 + facet_term);
}

double coherence_time_ps(double center_wavelength_nm, double fwhm_nm) {
  if (fwhm_nm <= 0.0) {
    throw Error(ErrorCode::domain_error, "filter fwhm must be > 0 for a coherence time");
  }
  const double lambda_m = center_wavelength_nm * 1e-9;
  const double dl_m = fwhm_nm * 1e-9;
  return lambda_m * lambda_m / (kSpeedOfLightMps * dl_m) * kPsPerSecond;
}

PeakWeights franson_peak_weights(double phase_rad, double intrinsic_visibility) {
  PeakWeights w;
  w.left = 1.0 / 16.0;
  w.right = 1.0 / 16.0;
  w.center = (1.0 + intrinsic_visibility * std::cos(2.0 * phase_rad)) / 8.0;
  w.discarded = 1.0 - w.left - w.center - w.right;
  return w;
}

BellResult bell_from_visibility(double visibility, double sigma_v) {
  const double two_sqrt2 = 2.0 * std::numbers::sqrt2;
  BellResult result;
  result.s_value = two_sqrt2 * visibility;
  result.sigma_s = two_sqrt2 * sigma_v;
  if (result.sigma_s > 0.0) {
    result.violation_sigmas = (result.s_value - 2.0) / result.sigma_s;
  }
  return result;
}

CheckReport timescale_check(const TimescaleParams& t, double margin) {
  CheckReport report;
  report.margins = {
      {"path_imbalance / photon_coherence", t.path_imbalance_ps / t.photon_coherence_ps, margin},
      {"path_imbalance / detector_jitter", t.path_imbalance_ps / t.detector_jitter_ps, margin},
      {"pump_coherence / path_imbalance", t.pump_coherence_ps / t.path_imbalance_ps, margin},
  };
  report.passed = std::all_of(report.margins.begin(), report.margins.end(),
                              [](const TimescaleMargin& m) { return m.ratio() >= 1.0; });
  return report;
}

double predict_car(double true_coincidence_rate_hz, double singles_a_hz,
                   double singles_b_hz, double window_ps) {
  if (window_ps <= 0.0) {
    throw Error(ErrorCode::domain_error, "coincidence window must be > 0 ps");
  }
  if (true_coincidence_rate_hz == 0.0) return 1.0;
  const double accidental_hz = singles_a_hz * singles_b_hz * window_ps * 1e-12;
  if (accidental_hz == 0.0) {
    throw Error(ErrorCode::domain_error,
                "zero accidental rate with a nonzero true rate: CAR is unbounded");
  }
  return (true_coincidence_rate_hz + accidental_hz) / accidental_hz;
}

std::optional<SignalIdler> tuning_split(double pump_detuning_nm,
                                        double degeneracy_wavelength_nm) {
  if (pump_detuning_nm > 0.0) return std::nullopt;  // no phase matching above degeneracy
  constexpr double kSlope = 500.0;  // nm of signal/idler shift per nm of pump detuning
  const double split = kSlope * std::abs(pump_detuning_nm);
  return SignalIdler{degeneracy_wavelength_nm - split, degeneracy_wavelength_nm + split};
}

TimescaleParams implied_timescales(const ExperimentConfig& config,
                                   const FransonConfig& franson) {
  TimescaleParams t;
  t.photon_coherence_ps =
      coherence_time_ps(config.filter.center_wavelength_nm, config.filter.fwhm_nm);
  t.detector_jitter_ps =
      std::max(config.detector_a.jitter_fwhm_ps, config.detector_b.jitter_fwhm_ps);
  t.path_imbalance_ps = franson.path_imbalance_ps;
  t.pump_coherence_ps = config.source.pump_coherence_ps;
  return t;
}

}  // namespace pairkit
