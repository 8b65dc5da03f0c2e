#include "pairkit/model.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>

#include "pairkit/errors.hpp"

namespace pairkit {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_key: return "unknown_key";
    case ErrorCode::invalid_value: return "invalid_value";
    case ErrorCode::invariant_violation: return "invariant_violation";
    case ErrorCode::domain_error: return "domain_error";
    case ErrorCode::capacity: return "capacity";
    case ErrorCode::unsorted_stream: return "unsorted_stream";
    case ErrorCode::no_peak: return "no_peak";
    case ErrorCode::no_background: return "no_background";
    case ErrorCode::overlapping_windows: return "overlapping_windows";
    case ErrorCode::insufficient_background: return "insufficient_background";
    case ErrorCode::degenerate_data: return "degenerate_data";
  }
  return "unknown";
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view value, std::string_view key, int line) {
  std::string buf(value);
  char* end = nullptr;
  double v = std::strtod(buf.c_str(), &end);
  if (end == buf.c_str() || *end != '\0' || !std::isfinite(v)) {
    throw ConfigError(ErrorCode::invalid_value, std::string(key), line,
                      "line " + std::to_string(line) + ": invalid value '" + buf +
                          "' for key '" + std::string(key) + "'");
  }
  return v;
}

double* no_field(ExperimentConfig&) { return nullptr; }

// The documented key table. Order here is the canonical serialization order.
constexpr struct {
  const char* key;
  const char* unit;
  double* (*field)(ExperimentConfig&);
} kKeyTable[] = {
    {"source.pair_rate", "Hz", [](ExperimentConfig& c) { return &c.source.pair_rate_hz; }},
    {"source.pump_wavelength", "nm", [](ExperimentConfig& c) { return &c.source.pump_wavelength_nm; }},
    {"source.degeneracy_wavelength", "nm", [](ExperimentConfig& c) { return &c.source.degeneracy_wavelength_nm; }},
    {"source.internal_pump_power", "uW", [](ExperimentConfig& c) { return &c.source.internal_pump_power_uw; }},
    {"source.temperature", "C", [](ExperimentConfig& c) { return &c.source.temperature_c; }},
    {"source.pump_coherence", "ps", [](ExperimentConfig& c) { return &c.source.pump_coherence_ps; }},
    {"filter.center_wavelength", "nm", [](ExperimentConfig& c) { return &c.filter.center_wavelength_nm; }},
    {"filter.fwhm", "nm", [](ExperimentConfig& c) { return &c.filter.fwhm_nm; }},
    {"filter.shape", "rectangular", no_field},
    {"facets.reflectivity", "fraction", [](ExperimentConfig& c) { return &c.facets.reflectivity; }},
    {"facets.eta_te", "fraction", [](ExperimentConfig& c) { return &c.facets.eta_te; }},
    {"facets.eta_tm", "fraction", [](ExperimentConfig& c) { return &c.facets.eta_tm; }},
    {"facets.roundtrip_delay", "ps", [](ExperimentConfig& c) { return &c.facets.roundtrip_delay_ps; }},
    {"detector_a.efficiency", "fraction", [](ExperimentConfig& c) { return &c.detector_a.efficiency; }},
    {"detector_a.dark_rate", "Hz", [](ExperimentConfig& c) { return &c.detector_a.dark_rate_hz; }},
    {"detector_a.jitter_fwhm", "ps", [](ExperimentConfig& c) { return &c.detector_a.jitter_fwhm_ps; }},
    {"detector_a.dead_time", "ns", [](ExperimentConfig& c) { return &c.detector_a.dead_time_ns; }},
    {"detector_b.efficiency", "fraction", [](ExperimentConfig& c) { return &c.detector_b.efficiency; }},
    {"detector_b.dark_rate", "Hz", [](ExperimentConfig& c) { return &c.detector_b.dark_rate_hz; }},
    {"detector_b.jitter_fwhm", "ps", [](ExperimentConfig& c) { return &c.detector_b.jitter_fwhm_ps; }},
    {"detector_b.dead_time", "ns", [](ExperimentConfig& c) { return &c.detector_b.dead_time_ns; }},
    {"run.duration", "s", [](ExperimentConfig& c) { return &c.duration_s; }},
    {"run.histogram_bin", "ps", [](ExperimentConfig& c) { return &c.histogram_bin_ps; }},
    {"run.histogram_range", "ps", [](ExperimentConfig& c) { return &c.histogram_range_ps; }},
};

void check_range(std::vector<std::string>& out, bool ok, const std::string& message) {
  if (!ok) out.push_back(message);
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++line_no;

    if (std::size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(ErrorCode::invalid_value, std::string(line), line_no,
                        "line " + std::to_string(line_no) + ": expected 'section.key = value'");
    }
    std::string_view key = trim(line.substr(0, eq));
    std::string_view value = trim(line.substr(eq + 1));

    if (key == "filter.shape") {
      if (value != "rectangular") {
        throw ConfigError(ErrorCode::invalid_value, std::string(key), line_no,
                          "line " + std::to_string(line_no) +
                              ": unsupported filter shape '" + std::string(value) + "'");
      }
      config.filter.shape = FilterShape::rectangular;
      continue;
    }

    bool matched = false;
    for (const auto& entry : kKeyTable) {
      if (key == entry.key) {
        double* field = entry.field(config);
        if (field) *field = parse_number(value, key, line_no);
        matched = true;
        break;
      }
    }
    if (!matched) {
      throw ConfigError(ErrorCode::unknown_key, std::string(key), line_no,
                        "line " + std::to_string(line_no) + ": unknown key '" +
                            std::string(key) + "'");
    }
  }

  if (auto violations = validate(config); !violations.empty()) {
    std::string message = "config violates invariants:";
    for (const std::string& v : violations) message += "\n  " + v;
    throw ConfigError(ErrorCode::invariant_violation, violations.front(), 0, message);
  }
  return config;
}

std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> out;
  check_range(out, c.source.pair_rate_hz >= 0, "source.pair_rate must be >= 0 Hz");
  check_range(out, c.source.pump_wavelength_nm > 700 && c.source.pump_wavelength_nm < 900,
              "source.pump_wavelength must lie in (700, 900) nm");
  check_range(out, c.source.degeneracy_wavelength_nm > 1400 && c.source.degeneracy_wavelength_nm < 1700,
              "source.degeneracy_wavelength must lie in (1400, 1700) nm");
  check_range(out, c.source.pump_coherence_ps > 0, "source.pump_coherence must be > 0 ps");
  check_range(out, c.filter.center_wavelength_nm > 0, "filter.center_wavelength must be > 0 nm");
  check_range(out, c.filter.fwhm_nm > 0, "filter.fwhm must be > 0 nm");
  check_range(out, c.facets.reflectivity >= 0 && c.facets.reflectivity < 1,
              "facets.reflectivity must lie in [0, 1)");
  check_range(out, c.facets.eta_te >= 0 && c.facets.eta_te <= 1,
              "facets.eta_te must lie in [0, 1]");
  check_range(out, c.facets.eta_tm >= 0 && c.facets.eta_tm <= 1,
              "facets.eta_tm must lie in [0, 1]");
  check_range(out, c.facets.roundtrip_delay_ps > 0, "facets.roundtrip_delay must be > 0 ps");
  const DetectorParams* dets[2] = {&c.detector_a, &c.detector_b};
  const char* names[2] = {"detector_a", "detector_b"};
  for (int i = 0; i < 2; ++i) {
    const DetectorParams& d = *dets[i];
    const std::string n = names[i];
    check_range(out, d.efficiency >= 0 && d.efficiency <= 1, n + ".efficiency must lie in [0, 1]");
    check_range(out, d.dark_rate_hz >= 0, n + ".dark_rate must be >= 0 Hz");
    check_range(out, d.jitter_fwhm_ps >= 0, n + ".jitter_fwhm must be >= 0 ps");
    check_range(out, d.dead_time_ns >= 0, n + ".dead_time must be >= 0 ns");
  }
  check_range(out, c.duration_s > 0, "run.duration must be > 0 s");
  check_range(out, c.histogram_bin_ps > 0, "run.histogram_bin must be > 0 ps");
  check_range(out, c.histogram_bin_ps == std::floor(c.histogram_bin_ps),
              "run.histogram_bin must be an integer number of ps");
  check_range(out, c.histogram_range_ps >= 10 * c.histogram_bin_ps,
              "run.histogram_range must be >= 10 * run.histogram_bin");
  return out;
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  out += "# pairkit experiment configuration (canonical form)\n";
  char buf[512];
  ExperimentConfig& mutable_config = const_cast<ExperimentConfig&>(config);
  for (const auto& entry : kKeyTable) {
    if (std::string_view(entry.key) == "filter.shape") {
      out += "filter.shape = rectangular\n";
      continue;
    }
    double* field = entry.field(mutable_config);
    std::snprintf(buf, sizeof(buf), "%s = %.17g  # %s\n", entry.key, *field, entry.unit);
    out += buf;
  }
  return out;
}

std::uint64_t config_digest(const ExperimentConfig& config) {
  const std::string text = serialize_config(config);
  std::uint64_t hash = 0xCBF29CE484222325ULL;  // FNV-1a 64
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

bool operator==(const SourceParams& a, const SourceParams& b) {
  return a.pair_rate_hz == b.pair_rate_hz && a.pump_wavelength_nm == b.pump_wavelength_nm &&
         a.degeneracy_wavelength_nm == b.degeneracy_wavelength_nm &&
         a.internal_pump_power_uw == b.internal_pump_power_uw &&
         a.temperature_c == b.temperature_c && a.pump_coherence_ps == b.pump_coherence_ps;
}

bool operator==(const FilterParams& a, const FilterParams& b) {
  return a.center_wavelength_nm == b.center_wavelength_nm && a.fwhm_nm == b.fwhm_nm &&
         a.shape == b.shape;
}

bool operator==(const FacetParams& a, const FacetParams& b) {
  return a.reflectivity == b.reflectivity && a.eta_te == b.eta_te && a.eta_tm == b.eta_tm &&
         a.roundtrip_delay_ps == b.roundtrip_delay_ps;
}

bool operator==(const DetectorParams& a, const DetectorParams& b) {
  return a.efficiency == b.efficiency && a.dark_rate_hz == b.dark_rate_hz &&
         a.jitter_fwhm_ps == b.jitter_fwhm_ps && a.dead_time_ns == b.dead_time_ns;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.source == b.source && a.filter == b.filter && a.facets == b.facets &&
         a.detector_a == b.detector_a && a.detector_b == b.detector_b &&
         a.duration_s == b.duration_s && a.histogram_bin_ps == b.histogram_bin_ps &&
         a.histogram_range_ps == b.histogram_range_ps;
}

}  // namespace pairkit
