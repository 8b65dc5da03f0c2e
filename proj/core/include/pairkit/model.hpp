#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pairkit {

// Parameter records shared by the analytic formulas, the Monte Carlo engine
// and the analysis code. All values are plain doubles with the unit fixed by
// the field name or the key table in docs/config_keys (see serialize_config).
// Records are immutable value types once built; share freely across threads.

struct SourceParams {
  double pair_rate_hz = 7.2e6;           // generated pairs per second
  double pump_wavelength_nm = 783.0;     // must lie in (700, 900)
  double degeneracy_wavelength_nm = 1566.0;  // pair center, (1400, 1700)
  double internal_pump_power_uw = 625.0;     // metadata only
  double temperature_c = 20.1;               // metadata only
  double pump_coherence_ps = 1.0e6;      // cw pump coherence time (1 us)
};

enum class FilterShape { rectangular };

struct FilterParams {
  double center_wavelength_nm = 1566.0;
  double fwhm_nm = 10.8;
  FilterShape shape = FilterShape::rectangular;
};

struct FacetParams {
  double reflectivity = 0.24;      // R, one facet, 0 <= R < 1
  double eta_te = 0.6925;          // effective survival of one TE round trip
  double eta_tm = 0.6925;          // effective survival of one TM round trip
  double roundtrip_delay_ps = 43.0;  // extra delay of a double-reflected photon
};

struct DetectorParams {
  double efficiency = 0.10;
  double dark_rate_hz = 100.0;
  double jitter_fwhm_ps = 200.0;  // Gaussian FWHM
  double dead_time_ns = 100.0;    // non-paralyzable
};

struct TimescaleParams {
  double photon_coherence_ps = 0.7;   // tau_c
  double detector_jitter_ps = 200.0;  // tau_det
  double path_imbalance_ps = 2500.0;  // delta_t = delta_L / c
  double pump_coherence_ps = 1.0e6;   // tau_p
};

struct FransonConfig {
  double path_imbalance_ps = 2500.0;
  double phase_rad = 0.0;
  double intrinsic_visibility = 0.956;  // entanglement quality before noise
};

struct HomConfig {
  std::vector<double> delays_ps;        // scan offsets, must be non-empty
  double intrinsic_visibility = 1.0;    // excludes the facet effect
};

struct ExperimentConfig {
  SourceParams source;
  FilterParams filter;
  FacetParams facets;
  DetectorParams detector_a;
  DetectorParams detector_b;
  double duration_s = 1.0;
  double histogram_bin_ps = 164.0;      // integer number of ps
  double histogram_range_ps = 50000.0;  // histogram covers |dt| <= range
};

// Parses a line-oriented "section.key = value" document ('#' starts a
// comment). Unknown keys, malformed values and invariant violations raise
// ConfigError with the key and line number. Values are never clamped.
ExperimentConfig parse_config(std::string_view text);

// Returns one human-readable description per violated invariant, each naming
// the offending field; empty when the config is valid.
std::vector<std::string> validate(const ExperimentConfig& config);

// Canonical serialization: every key in a fixed order, full precision, with
// unit comments. parse_config(serialize_config(c)) == c for valid c.
std::string serialize_config(const ExperimentConfig& config);

// FNV-1a over the canonical serialization; stable across runs and platforms.
std::uint64_t config_digest(const ExperimentConfig& config);

bool operator==(const SourceParams&, const SourceParams&);
bool operator==(const FilterParams&, const FilterParams&);
bool operator==(const FacetParams&, const FacetParams&);
bool operator==(const DetectorParams&, const DetectorParams&);
bool operator==(const ExperimentConfig&, const ExperimentConfig&);

}  // namespace pairkit
