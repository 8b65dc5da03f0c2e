#pragma once

#include <cstdint>
#include <vector>

#include "pairkit/events.hpp"
#include "pairkit/model.hpp"

namespace pairkit {

// Seeded Monte Carlo generation of detection-event streams. Everything is
// reproducible: the same (config, seed) gives byte-identical results
// regardless of thread count, because every scan point and every noise
// source draws from its own SplitMix64-derived substream (see rng.hpp).

// Memory budget guard: expected generated records (emitted pairs plus dark
// counts) above this raise ErrorCode::capacity before any allocation.
inline constexpr double kMaxExpectedEvents = 1e8;

// TE/TM pairs emitted as a homogeneous Poisson process, deterministically
// separated (TE -> A, TM -> B). Each photon survives to its detector with
// its channel efficiency; a surviving photon is facet-delayed by
// roundtrip_delay with relative weight R^2 * eta_pol / (1 - R). Gaussian
// jitter per detection, independent Poisson dark counts per channel, then
// non-paralyzable dead time, then sort.
EventStream simulate_pair_stream(const ExperimentConfig& config, std::uint64_t seed);

// HOM delay scan. Per pair the facet class is drawn once with weights
// {1, w_te, w_tm} (direct-direct / TE delayed / TM delayed), so the expected
// dip visibility is exactly intrinsic_visibility * visibility_bound(facets):
// a detected direct-direct pair produces a cross-channel coincidence with
// probability (1 - V*sinc(2*pi*dt*dlambda*c/lambda^2))/2, a delayed pair
// with probability 1/2. Counts include accidental coincidences from singles
// and dark counts inside the scan coincidence window.
std::vector<ScanPoint> simulate_hom_scan(const ExperimentConfig& config,
                                         const HomConfig& hom,
                                         std::int64_t pairs_per_point,
                                         std::uint64_t seed);

struct FransonScanPoint {
  double phase_rad = 0.0;
  EventStream stream;
};

// Franson phase scan: per pair an outcome is sampled from
// franson_peak_weights(phase, V * exp(-delta_t / tau_p)); a side-left pair
// shifts the channel-A photon by -delta_t, side-right by +delta_t, the
// center outcome leaves both at the emission time, and discarded pairs
// vanish. Detector effects (efficiency, jitter, darks, dead time) are then
// applied as in simulate_pair_stream. Callers are expected to run
// timescale_check first and warn when it fails.
std::vector<FransonScanPoint> simulate_franson_scan(const ExperimentConfig& config,
                                                    const FransonConfig& franson,
                                                    const std::vector<double>& phases_rad,
                                                    std::int64_t pairs_per_point,
                                                    std::uint64_t seed);

// Coincidence window used by the scan accidental model: the combined
// detector jitter FWHM (quadrature sum), floored at one histogram bin.
double scan_coincidence_window_ps(const ExperimentConfig& config);

}  // namespace pairkit
