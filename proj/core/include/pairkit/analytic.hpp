#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pairkit/model.hpp"

namespace pairkit {

// Closed-form predictions for the three experiments. These are the oracles
// the Monte Carlo engine is checked against, so everything here is a pure
// function of its arguments.

// Speed of light used throughout, m/s. Fixed by convention so that fitted
// and predicted quantities are reproducible to the last digit.
inline constexpr double kSpeedOfLightMps = 2.9979e8;

inline constexpr double kPsPerSecond = 1e12;

// sin(x)/x with sinc(0) = 1 (unnormalized convention).
double sinc(double x);

struct HomDipParams {
  double amplitude;             // coincidence level far from the dip
  double visibility;            // dip contrast, in [0, 1]
  double center_wavelength_nm;  // photon-pair center wavelength
  double fwhm_nm;               // rectangular filter width
};

// Expected coincidence rate at relative delay delta_t for a rectangular
// spectrum: A * (1 - V * sinc(2*pi*dt*dlambda*c/lambda^2)). Even in delta_t;
// minimum A*(1-V) at zero delay.
double hom_dip_rate(double delta_t_ps, const HomDipParams& params);

// Maximum achievable HOM visibility for a waveguide with facet reflectivity
// R and round-trip survivals eta: 1 / (1 + R^2/(1-R) * (eta_tm + eta_te)).
// Throws ErrorCode::domain_error when R >= 1.
double visibility_bound(const FacetParams& facets);

// Transform-limited coherence time lambda^2 / (c * dlambda), in ps.
// Throws ErrorCode::domain_error when fwhm_nm <= 0.
double coherence_time_ps(double center_wavelength_nm, double fwhm_nm);

struct PeakWeights {
  double left;       // one photon short, the other long
  double center;     // coherent short-short / long-long sum
  double right;
  double discarded;  // pairs lost to post-selection
};

// Per-pair outcome probabilities behind the three-peak coincidence
// histogram of an unbalanced interferometer, post-selected on one output
// port: left = right = 1/16, center = (1 + V cos 2phi) / 8. The satellite
// weights do not depend on the phase.
PeakWeights franson_peak_weights(double phase_rad, double intrinsic_visibility);

struct BellResult {
  double s_value;    // S = 2*sqrt(2)*V for sinusoidal fringes
  double sigma_s;    // 2*sqrt(2)*sigma_V
  std::optional<double> violation_sigmas;  // (S-2)/sigma_S, absent if sigma_S=0
};

BellResult bell_from_visibility(double visibility, double sigma_v);

struct TimescaleMargin {
  std::string name;  // e.g. "path_imbalance / photon_coherence"
  double achieved;   // realized ratio
  double required;   // the configured margin
  double ratio() const { return achieved / required; }
};

struct CheckReport {
  bool passed = false;  // true iff every margin ratio() >= 1
  std::vector<TimescaleMargin> margins;
};

// Checks (tau_c, tau_det) << delta_t << tau_p with "<<" read as a factor of
// `margin` (default 10).
CheckReport timescale_check(const TimescaleParams& t, double margin = 10.0);

// Standard accidental-coincidence estimate: R_acc = singles_a * singles_b *
// window, CAR = (R_true + R_acc) / R_acc. Returns 1 for a pure-background
// stream (R_true = 0). Throws ErrorCode::domain_error when R_acc = 0 while
// R_true > 0.
double predict_car(double true_coincidence_rate_hz, double singles_a_hz,
                   double singles_b_hz, double window_ps);

struct SignalIdler {
  double signal_nm;
  double idler_nm;
};

// Linear phase-matching tuning model: detuning the pump 0.2 nm below the
// degeneracy point moves signal and idler apart by 100 nm each (slope 500).
// Above degeneracy phase matching fails and the result is empty.
std::optional<SignalIdler> tuning_split(double pump_detuning_nm,
                                        double degeneracy_wavelength_nm);

// Timescales of a Franson run assembled from the experiment configuration:
// tau_c from the filter, tau_det from the slower detector, delta_t and tau_p
// from the interferometer and pump settings.
TimescaleParams implied_timescales(const ExperimentConfig& config,
                                   const FransonConfig& franson);

}  // namespace pairkit
