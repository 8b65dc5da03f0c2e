#include "pairkit/mc_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "pairkit/analytic.hpp"
#include "pairkit/errors.hpp"
#include "pairkit/rng.hpp"

namespace pairkit {

namespace {

// fwhm = 2*sqrt(2*ln 2) * sigma
constexpr double kFwhmPerSigma = 2.3548200450309493;

// Substream ids of the master seed; documented part of the determinism
// contract (same seed => same stream regardless of chunking).
enum StreamId : std::uint64_t {
  kStreamPairs = 0,
  kStreamDarkA = 1,
  kStreamDarkB = 2,
  kStreamScanBase = 16,  // + point index
};

struct FacetWeights {
  double te = 0.0;  // relative weight of a delayed TE photon, R^2*eta/(1-R)
  double tm = 0.0;
};

FacetWeights facet_weights(const FacetParams& facets) {
  const double r = facets.reflectivity;
  if (r >= 1.0) throw Error(ErrorCode::domain_error, "facet reflectivity must be < 1");
  const double scale = r * r / (1.0 - r);
  return {scale * facets.eta_te, scale * facets.eta_tm};
}

void check_capacity(double expected_events, const std::string& what) {
  if (expected_events > kMaxExpectedEvents) {
    throw Error(ErrorCode::capacity,
                what + ": expected ~" + std::to_string(expected_events) +
                    " generated records, over the " + std::to_string(kMaxExpectedEvents) +
                    " budget; shorten the run or reduce the rate");
  }
}

void append_dark_counts(std::vector<std::int64_t>& times, double rate_hz,
                        double duration_s, std::mt19937_64& gen) {
  if (rate_hz <= 0.0) return;
  std::exponential_distribution<double> interval(rate_hz);
  for (double t = interval(gen); t <= duration_s; t += interval(gen)) {
    times.push_back(std::llround(t * kPsPerSecond));
  }
}

// Non-paralyzable: an accepted event blinds the channel for dead_ps.
void apply_dead_time(std::vector<std::int64_t>& times, double dead_ps) {
  if (dead_ps <= 0.0 || times.empty()) return;
  const std::int64_t dead = std::llround(dead_ps);
  std::size_t kept = 1;
  std::int64_t last = times[0];
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] - last >= dead) {
      times[kept++] = times[i];
      last = times[i];
    }
  }
  times.resize(kept);
}

void drop_outside(std::vector<std::int64_t>& times, std::int64_t duration_ps) {
  std::erase_if(times, [duration_ps](std::int64_t t) { return t < 0 || t > duration_ps; });
}

EventStream finalize_stream(std::vector<std::int64_t>&& a_times,
                            std::vector<std::int64_t>&& b_times,
                            const ExperimentConfig& config, double duration_s,
                            std::uint64_t seed) {
  const std::int64_t duration_ps = std::llround(duration_s * kPsPerSecond);
  for (auto* times : {&a_times, &b_times}) {
    std::sort(times->begin(), times->end());
    drop_outside(*times, duration_ps);
  }
  apply_dead_time(a_times, config.detector_a.dead_time_ns * 1e3);
  apply_dead_time(b_times, config.detector_b.dead_time_ns * 1e3);

  EventStream stream;
  stream.duration_s = duration_s;
  stream.seed = seed;
  stream.config_digest = config_digest(config);
  stream.events.reserve(a_times.size() + b_times.size());
  for (std::int64_t t : a_times) stream.events.push_back({t, Channel::A});
  for (std::int64_t t : b_times) stream.events.push_back({t, Channel::B});
  std::sort(stream.events.begin(), stream.events.end(), [](const Event& x, const Event& y) {
    return x.time_ps != y.time_ps ? x.time_ps < y.time_ps : x.channel < y.channel;
  });
  return stream;
}

std::int64_t binomial(std::mt19937_64& gen, std::int64_t n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<std::int64_t> dist(n, p);
  return dist(gen);
}

std::int64_t poisson(std::mt19937_64& gen, double mean) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(gen);
}

int scan_thread_count() {
  if (const char* env = std::getenv("PAIRKIT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

// Runs fn(i) for i in [0, n) across the configured number of threads.
// Results must be written to per-index slots so chunking cannot matter.
void run_indexed(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const int threads = std::min<int>(scan_thread_count(), static_cast<int>(n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace

double scan_coincidence_window_ps(const ExperimentConfig& config) {
  const double ja = config.detector_a.jitter_fwhm_ps;
  const double jb = config.detector_b.jitter_fwhm_ps;
  return std::max(std::sqrt(ja * ja + jb * jb), config.histogram_bin_ps);
}

EventStream simulate_pair_stream(const ExperimentConfig& config, std::uint64_t seed) {
  const double rate = config.source.pair_rate_hz;
  const double duration = config.duration_s;
  check_capacity(duration * (rate + config.detector_a.dark_rate_hz +
                             config.detector_b.dark_rate_hz),
                 "simulate_pair_stream");

  const FacetWeights w = facet_weights(config.facets);
  // Per detected photon: delayed with probability w/(1+w) against the direct
  // path, adding one facet round trip.
  const double p_delay_te = w.te / (1.0 + w.te);
  const double p_delay_tm = w.tm / (1.0 + w.tm);
  const double sigma_a = config.detector_a.jitter_fwhm_ps / kFwhmPerSigma;
  const double sigma_b = config.detector_b.jitter_fwhm_ps / kFwhmPerSigma;
  const double delay_ps = config.facets.roundtrip_delay_ps;

  std::vector<std::int64_t> a_times;
  std::vector<std::int64_t> b_times;
  a_times.reserve(static_cast<std::size_t>(duration * rate * config.detector_a.efficiency * 1.1) + 16);
  b_times.reserve(static_cast<std::size_t>(duration * rate * config.detector_b.efficiency * 1.1) + 16);

  if (rate > 0.0) {
    std::mt19937_64 gen = make_substream(seed, kStreamPairs);
    std::exponential_distribution<double> interval(rate);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    // TE photon -> detector A, TM photon -> detector B (deterministic
    // separation at the polarizing beam splitter).
    for (double t_s = interval(gen); t_s <= duration; t_s += interval(gen)) {
      const double t_ps = t_s * kPsPerSecond;
      if (uni(gen) < config.detector_a.efficiency) {
        double t = t_ps;
        if (uni(gen) < p_delay_te) t += delay_ps;
        if (sigma_a > 0.0) t += sigma_a * normal(gen);
        a_times.push_back(std::llround(t));
      }
      if (uni(gen) < config.detector_b.efficiency) {
        double t = t_ps;
        if (uni(gen) < p_delay_tm) t += delay_ps;
        if (sigma_b > 0.0) t += sigma_b * normal(gen);
        b_times.push_back(std::llround(t));
      }
    }
  }

  std::mt19937_64 gen_dark_a = make_substream(seed, kStreamDarkA);
  std::mt19937_64 gen_dark_b = make_substream(seed, kStreamDarkB);
  append_dark_counts(a_times, config.detector_a.dark_rate_hz, duration, gen_dark_a);
  append_dark_counts(b_times, config.detector_b.dark_rate_hz, duration, gen_dark_b);

  return finalize_stream(std::move(a_times), std::move(b_times), config, duration, seed);
}

std::vector<ScanPoint> simulate_hom_scan(const ExperimentConfig& config,
                                         const HomConfig& hom,
                                         std::int64_t pairs_per_point,
                                         std::uint64_t seed) {
  if (pairs_per_point <= 0) {
    throw Error(ErrorCode::domain_error, "pairs_per_point must be > 0");
  }
  if (hom.delays_ps.empty()) {
    throw Error(ErrorCode::domain_error, "HOM scan needs a non-empty delay list");
  }
  if (hom.intrinsic_visibility < 0.0 || hom.intrinsic_visibility > 1.0) {
    throw Error(ErrorCode::domain_error, "intrinsic visibility must lie in [0, 1]");
  }

  const double rate = config.source.pair_rate_hz;
  const double point_duration_s = rate > 0.0 ? pairs_per_point / rate : config.duration_s;
  check_capacity(static_cast<double>(pairs_per_point) +
                     point_duration_s * (config.detector_a.dark_rate_hz +
                                         config.detector_b.dark_rate_hz),
                 "simulate_hom_scan");

  const FacetWeights w = facet_weights(config.facets);
  // One facet class per pair with weights {1, w_te, w_tm}: the direct-direct
  // fraction is then exactly visibility_bound(facets).
  const double norm = 1.0 + w.te + w.tm;
  const double q_dd = 1.0 / norm;
  const double e_a = config.detector_a.efficiency;
  const double e_b = config.detector_b.efficiency;
  const double window_s = scan_coincidence_window_ps(config) * 1e-12;
  const double lambda_nm = config.filter.center_wavelength_nm;
  const double fwhm_nm = config.filter.fwhm_nm;

  std::vector<ScanPoint> points(hom.delays_ps.size());
  run_indexed(points.size(), [&](std::size_t i) {
    std::mt19937_64 gen = make_substream(seed, kStreamScanBase + i);
    const double delta_t = hom.delays_ps[i];

    // Interference survives only for direct-direct pairs.
    HomDipParams dip{1.0, hom.intrinsic_visibility, lambda_nm, fwhm_nm};
    const double p_cross_dd = 0.5 * hom_dip_rate(delta_t, dip);

    const std::int64_t n_dd = binomial(gen, pairs_per_point, q_dd);
    const std::int64_t n_delayed = pairs_per_point - n_dd;
    const std::int64_t n_te =
        (w.te + w.tm) > 0.0 ? binomial(gen, n_delayed, w.te / (w.te + w.tm)) : 0;
    const std::int64_t n_tm = n_delayed - n_te;

    const std::int64_t n_cross = binomial(gen, n_dd, p_cross_dd) +
                                 binomial(gen, n_te, 0.5) + binomial(gen, n_tm, 0.5);
    const std::int64_t n_same = pairs_per_point - n_cross;

    // Cross-port pairs: both / A only / B only detected, drawn consistently.
    const std::int64_t n_both = binomial(gen, n_cross, e_a * e_b);
    std::int64_t rest = n_cross - n_both;
    const double p_a_only =
        (1.0 - e_a * e_b) > 0.0 ? e_a * (1.0 - e_b) / (1.0 - e_a * e_b) : 0.0;
    const std::int64_t n_a_only = binomial(gen, rest, p_a_only);
    rest -= n_a_only;
    const std::int64_t n_b_only = binomial(gen, rest, e_b);

    // Bunched pairs land two photons on one detector, which clicks at most
    // once within the jitter window.
    const std::int64_t n_same_a = binomial(gen, n_same, 0.5);
    const std::int64_t click_aa = binomial(gen, n_same_a, 1.0 - (1.0 - e_a) * (1.0 - e_a));
    const std::int64_t click_bb = binomial(gen, n_same - n_same_a, 1.0 - (1.0 - e_b) * (1.0 - e_b));

    ScanPoint& p = points[i];
    p.control = delta_t;
    p.singles_a = n_both + n_a_only + click_aa +
                  poisson(gen, config.detector_a.dark_rate_hz * point_duration_s);
    p.singles_b = n_both + n_b_only + click_bb +
                  poisson(gen, config.detector_b.dark_rate_hz * point_duration_s);

    // Accidental coincidences of uncorrelated singles inside the window.
    std::int64_t accidentals = 0;
    if (point_duration_s > 0.0) {
      const double rate_a = static_cast<double>(p.singles_a) / point_duration_s;
      const double rate_b = static_cast<double>(p.singles_b) / point_duration_s;
      accidentals = poisson(gen, rate_a * rate_b * window_s * point_duration_s);
    }
    p.coincidences = n_both + accidentals;
  });

  std::stable_sort(points.begin(), points.end(),
                   [](const ScanPoint& a, const ScanPoint& b) { return a.control < b.control; });
  return points;
}

std::vector<FransonScanPoint> simulate_franson_scan(const ExperimentConfig& config,
                                                    const FransonConfig& franson,
                                                    const std::vector<double>& phases_rad,
                                                    std::int64_t pairs_per_point,
                                                    std::uint64_t seed) {
  if (pairs_per_point <= 0) {
    throw Error(ErrorCode::domain_error, "pairs_per_point must be > 0");
  }
  if (phases_rad.empty()) {
    throw Error(ErrorCode::domain_error, "Franson scan needs a non-empty phase list");
  }
  if (franson.path_imbalance_ps <= 0.0) {
    throw Error(ErrorCode::domain_error, "path imbalance must be > 0 ps");
  }
  if (franson.intrinsic_visibility < 0.0 || franson.intrinsic_visibility > 1.0) {
    throw Error(ErrorCode::domain_error, "intrinsic visibility must lie in [0, 1]");
  }

  const double rate = config.source.pair_rate_hz;
  const double point_duration_s = rate > 0.0 ? pairs_per_point / rate : config.duration_s;
  check_capacity(static_cast<double>(pairs_per_point) +
                     point_duration_s * (config.detector_a.dark_rate_hz +
                                         config.detector_b.dark_rate_hz),
                 "simulate_franson_scan");

  // Pairs emitted within the pump coherence time lose mutual coherence;
  // negligible at tau_p >> delta_t but it keeps the condition consequential.
  const double v_eff = franson.intrinsic_visibility *
                       std::exp(-franson.path_imbalance_ps / config.source.pump_coherence_ps);
  const double delta_t_ps = franson.path_imbalance_ps;
  const double e_a = config.detector_a.efficiency;
  const double e_b = config.detector_b.efficiency;
  const double sigma_a = config.detector_a.jitter_fwhm_ps / kFwhmPerSigma;
  const double sigma_b = config.detector_b.jitter_fwhm_ps / kFwhmPerSigma;

  std::vector<FransonScanPoint> points(phases_rad.size());
  run_indexed(points.size(), [&](std::size_t i) {
    std::mt19937_64 gen = make_substream(seed, kStreamScanBase + i);
    const double phase = phases_rad[i];
    const PeakWeights weights = franson_peak_weights(phase, v_eff);

    std::vector<std::int64_t> a_times;
    std::vector<std::int64_t> b_times;

    if (rate > 0.0) {
      std::exponential_distribution<double> interval(rate);
      std::uniform_real_distribution<double> uni(0.0, 1.0);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (double t_s = interval(gen); t_s <= point_duration_s; t_s += interval(gen)) {
        const double u = uni(gen);
        double a_shift;
        if (u < weights.left) {
          a_shift = -delta_t_ps;
        } else if (u < weights.left + weights.center) {
          a_shift = 0.0;
        } else if (u < weights.left + weights.center + weights.right) {
          a_shift = delta_t_ps;
        } else {
          continue;  // post-selection discards the pair
        }
        const double t_ps = t_s * kPsPerSecond;
        if (uni(gen) < e_a) {
          double t = t_ps + a_shift;
          if (sigma_a > 0.0) t += sigma_a * normal(gen);
          a_times.push_back(std::llround(t));
        }
        if (uni(gen) < e_b) {
          double t = t_ps;
          if (sigma_b > 0.0) t += sigma_b * normal(gen);
          b_times.push_back(std::llround(t));
        }
      }
    }

    std::mt19937_64 gen_dark_a = make_substream(seed, kStreamDarkA + 64 * (i + 1));
    std::mt19937_64 gen_dark_b = make_substream(seed, kStreamDarkB + 64 * (i + 1));
    append_dark_counts(a_times, config.detector_a.dark_rate_hz, point_duration_s, gen_dark_a);
    append_dark_counts(b_times, config.detector_b.dark_rate_hz, point_duration_s, gen_dark_b);

    points[i].phase_rad = phase;
    points[i].stream = finalize_stream(std::move(a_times), std::move(b_times), config,
                                       point_duration_s, seed);
  });

  std::stable_sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    return a.phase_rad < b.phase_rad;
  });
  return points;
}

}  // namespace pairkit
