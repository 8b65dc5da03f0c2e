#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "pairkit/analytic.hpp"
#include "pairkit/errors.hpp"
#include "pairkit/fitting.hpp"
#include "pairkit/histogram.hpp"
#include "pairkit/io.hpp"
#include "pairkit/mc_engine.hpp"
#include "pairkit/model.hpp"
#include "pairkit/version.hpp"

namespace pairkit::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kFwhmPerSigma = 2.3548200450309493;

ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(ErrorCode::invalid_value, path, 0,
                      "cannot open config file '" + path + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

// "start:stop:step" (inclusive stop) or a single value.
std::vector<double> parse_range_spec(const std::string& spec, const char* what) {
  std::vector<double> parts;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const std::size_t colon = spec.find(':', pos);
    const std::string token =
        spec.substr(pos, colon == std::string::npos ? spec.size() - pos : colon - pos);
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw ConfigError(ErrorCode::invalid_value, what, 0,
                        std::string(what) + " spec '" + spec + "': bad number '" + token + "'");
    }
    if (colon == std::string::npos) break;
    pos = colon + 1;
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3 || parts[2] <= 0.0 || parts[1] < parts[0]) {
    throw ConfigError(ErrorCode::invalid_value, what, 0,
                      std::string(what) + " spec '" + spec + "' must be start:stop:step");
  }
  std::vector<double> values;
  const auto count = static_cast<std::size_t>((parts[1] - parts[0]) / parts[2] + 1e-9) + 1;
  for (std::size_t k = 0; k < count; ++k) values.push_back(parts[0] + parts[2] * static_cast<double>(k));
  return values;
}

struct Manifest {
  std::string command;
  std::uint64_t config_digest = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
  std::vector<std::pair<std::string, std::string>> summary;
  std::vector<std::pair<std::string, bool>> checks;

  void write(const fs::path& directory) const {
    json j;
    j["command"] = command;
    char digest[32];
    std::snprintf(digest, sizeof(digest), "%016llx",
                  static_cast<unsigned long long>(config_digest));
    j["config_digest"] = digest;
    j["seed"] = seed;
    j["tool_version"] = kVersion;
    j["outputs"] = outputs;
    json s = json::object();
    for (const auto& [key, value] : summary) s[key] = value;
    j["summary"] = s;
    json c = json::array();
    for (const auto& [name, pass] : checks) c.push_back({{"name", name}, {"pass", pass}});
    j["checks"] = c;

    std::ofstream out(directory / (command + ".manifest.json"), std::ios::binary);
    out << j.dump(2) << '\n';
  }
};

fs::path output_directory(const std::string& out_path) {
  const fs::path parent = fs::path(out_path).parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

double gaussian_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Fraction of the true-coincidence delta distribution inside the summed
// bins. The delta of a jittered pair is Gaussian with the quadrature sum of
// the two jitter sigmas; facet round trips shift it by well under one bin at
// the defaults and are not modeled here.
double peak_capture_fraction(const ExperimentConfig& config, const Histogram& h,
                             const CarResult& car) {
  const double sigma_a = config.detector_a.jitter_fwhm_ps / kFwhmPerSigma;
  const double sigma_b = config.detector_b.jitter_fwhm_ps / kFwhmPerSigma;
  const double sigma = std::hypot(sigma_a, sigma_b);
  const double half_bin = static_cast<double>(h.bin_width_ps) / 2.0;
  double captured = 0.0;
  for (std::int64_t j = car.peak_first_bin; j <= car.peak_last_bin; ++j) {
    const double center = static_cast<double>(h.bin_center_ps(j));
    if (sigma > 0.0) {
      captured += gaussian_cdf((center + half_bin) / sigma) -
                  gaussian_cdf((center - half_bin) / sigma);
    } else if (center - half_bin <= 0.0 && 0.0 < center + half_bin) {
      captured += 1.0;
    }
  }
  return captured;
}

double alive_fraction(double input_rate_hz, double dead_time_ns) {
  return 1.0 / (1.0 + input_rate_hz * dead_time_ns * 1e-9);
}

int exit_code_for(const Error& error) {
  switch (error.code()) {
    case ErrorCode::capacity:
      return kExitResourceError;
    case ErrorCode::degenerate_data:
      return kExitFitError;
    default:
      return kExitConfigError;
  }
}

double flatness_chi2(const std::vector<double>& counts) {
  double mean = 0.0;
  for (double v : counts) mean += v;
  mean /= static_cast<double>(counts.size());
  if (mean <= 0.0) return 0.0;
  double chi2 = 0.0;
  for (double v : counts) chi2 += (v - mean) * (v - mean) / mean;
  return chi2;
}

}  // namespace

int cmd_simulate_pairs(const SimulatePairsOptions& options) {
  try {
    const ExperimentConfig config = load_config(options.config_path);
    const EventStream stream = simulate_pair_stream(config, options.seed);

    write_events_csv(options.events_path, stream);
    const Histogram h = build_histogram(stream, std::llround(config.histogram_bin_ps),
                                        std::llround(config.histogram_range_ps));
    write_histogram_csv(options.histogram_path, h);

    Manifest manifest;
    manifest.command = "simulate-pairs";
    manifest.config_digest = config_digest(config);
    manifest.seed = options.seed;
    manifest.outputs = {options.events_path, options.histogram_path};

    const double duration = config.duration_s;
    const double singles_a_hz = static_cast<double>(stream.singles(Channel::A)) / duration;
    const double singles_b_hz = static_cast<double>(stream.singles(Channel::B)) / duration;
    manifest.summary.emplace_back("singles_a_hz", format_double(singles_a_hz));
    manifest.summary.emplace_back("singles_b_hz", format_double(singles_b_hz));
    std::cout << "singles A = " << format_double(singles_a_hz)
              << " Hz, singles B = " << format_double(singles_b_hz) << " Hz\n";

    try {
      const Window window = peak_window(h);
      const CarResult car = compute_car(h, window);

      // Analytic oracle with the same window: detected true pairs corrected
      // for non-paralyzable dead time and for the peak fraction the summed
      // bins actually cover; accidentals from the measured singles rates.
      const double in_a = config.source.pair_rate_hz * config.detector_a.efficiency +
                          config.detector_a.dark_rate_hz;
      const double in_b = config.source.pair_rate_hz * config.detector_b.efficiency +
                          config.detector_b.dark_rate_hz;
      const double true_rate = config.source.pair_rate_hz * config.detector_a.efficiency *
                               config.detector_b.efficiency *
                               alive_fraction(in_a, config.detector_a.dead_time_ns) *
                               alive_fraction(in_b, config.detector_b.dead_time_ns);
      const double capture = peak_capture_fraction(config, h, car);
      const double window_ps =
          static_cast<double>(car.window_bins) * static_cast<double>(h.bin_width_ps);
      const double oracle = predict_car(true_rate * capture, singles_a_hz, singles_b_hz,
                                        window_ps);

      std::cout << "CAR (MC)     = " << format_double(car.car) << " +- "
                << format_double(car.sigma) << "  [window " << car.window_bins
                << " bins = " << format_double(window_ps) << " ps]\n";
      std::cout << "CAR (oracle) = " << format_double(oracle) << "\n";

      manifest.summary.emplace_back("car", format_double(car.car));
      manifest.summary.emplace_back("car_sigma", format_double(car.sigma));
      manifest.summary.emplace_back("car_oracle", format_double(oracle));
      manifest.summary.emplace_back("car_window_ps", format_double(window_ps));
      manifest.checks.emplace_back("car_within_10pct_of_oracle",
                                   std::abs(car.car / oracle - 1.0) <= 0.10);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_peak) throw;
      std::cerr << "warning: CAR undefined, " << e.what() << "\n";
      std::cout << "CAR (MC)     = undefined\n";
    }

    manifest.write(output_directory(options.events_path));
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

int cmd_hom(const HomOptions& options) {
  ExperimentConfig config;
  std::vector<ScanPoint> scan;
  Manifest manifest;
  try {
    config = load_config(options.config_path);
    const std::vector<double> delays = parse_range_spec(options.delay_spec, "delay");
    HomConfig hom;
    hom.delays_ps = delays;
    hom.intrinsic_visibility = options.intrinsic_visibility;

    scan = simulate_hom_scan(config, hom, options.pairs_per_point, options.seed);
    write_hom_scan_csv(options.out_path, scan);

    manifest.command = "hom";
    manifest.config_digest = config_digest(config);
    manifest.seed = options.seed;
    manifest.outputs = {options.out_path};

    const double ceiling = visibility_bound(config.facets);
    const double expected_dip = ceiling * options.intrinsic_visibility;
    manifest.summary.emplace_back("visibility_ceiling", format_double(ceiling));
    manifest.summary.emplace_back("expected_dip_visibility", format_double(expected_dip));
    std::cout << "facet visibility ceiling = " << format_double(ceiling)
              << ", expected dip visibility = " << format_double(expected_dip) << "\n";

    if (!options.fit) {
      manifest.write(output_directory(options.out_path));
      return kExitOk;
    }

    std::vector<DataPoint> points;
    for (const ScanPoint& p : scan) {
      points.push_back({p.control, static_cast<double>(p.coincidences),
                        poisson_sigma(static_cast<double>(p.coincidences))});
    }

    // Accidental background per point, estimated from the recorded singles.
    const double window_s = scan_coincidence_window_ps(config) * 1e-12;
    const double point_duration_s =
        config.source.pair_rate_hz > 0.0
            ? static_cast<double>(options.pairs_per_point) / config.source.pair_rate_hz
            : config.duration_s;
    double background = 0.0;
    for (const ScanPoint& p : scan) {
      background += static_cast<double>(p.singles_a) * static_cast<double>(p.singles_b) *
                    window_s / point_duration_s;
    }
    background /= static_cast<double>(scan.size());
    const double background_sigma =
        scan.empty() ? 0.0 : std::sqrt(background / static_cast<double>(scan.size()));

    const RawNetResult fit =
        raw_and_net_visibility(points, background, background_sigma, FitModel::hom,
                               config.filter.center_wavelength_nm);

    const std::string fit_path = options.out_path + ".fit.csv";
    write_fit_report_csv(fit_path, fit.net_fit);
    manifest.outputs.push_back(fit_path);

    std::cout << "raw visibility = " << format_double(fit.raw.value) << " +- "
              << format_double(fit.raw.sigma) << "\n";
    std::cout << "net visibility = " << format_double(fit.net.value) << " +- "
              << format_double(fit.net.sigma) << "\n";
    std::cout << "fitted dlambda = " << format_double(fit.net_fit.value(2)) << " +- "
              << format_double(fit.net_fit.sigma(2)) << " nm\n";

    manifest.summary.emplace_back("v_raw", format_double(fit.raw.value));
    manifest.summary.emplace_back("v_raw_sigma", format_double(fit.raw.sigma));
    manifest.summary.emplace_back("v_net", format_double(fit.net.value));
    manifest.summary.emplace_back("v_net_sigma", format_double(fit.net.sigma));
    manifest.summary.emplace_back("amplitude", format_double(fit.net_fit.value(0)));
    manifest.summary.emplace_back("dlambda_nm", format_double(fit.net_fit.value(2)));
    manifest.summary.emplace_back("dlambda_sigma", format_double(fit.net_fit.sigma(2)));
    manifest.checks.emplace_back(
        "net_visibility_within_2sigma_of_ceiling",
        std::abs(fit.net.value - expected_dip) <= 2.0 * fit.net.sigma);
    manifest.checks.emplace_back(
        "dlambda_within_0.3nm_of_filter",
        std::abs(fit.net_fit.value(2) - config.filter.fwhm_nm) <= 0.3);
    manifest.write(output_directory(options.out_path));

    if (!fit.raw_fit.converged || !fit.net_fit.converged) {
      std::cerr << "error: fit did not converge; best-so-far written\n";
      return kExitFitError;
    }
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.code() == ErrorCode::degenerate_data && !scan.empty()) {
      manifest.write(output_directory(options.out_path));
    }
    return exit_code_for(e);
  }
}

int cmd_franson(const FransonOptions& options) {
  std::vector<FransonScanPoint> scan;
  try {
    const ExperimentConfig config = load_config(options.config_path);
    const std::vector<double> phases = parse_range_spec(options.phase_spec, "phase");
    FransonConfig franson;
    franson.path_imbalance_ps = options.path_imbalance_ps;
    franson.intrinsic_visibility = options.intrinsic_visibility;

    const CheckReport timescales = timescale_check(implied_timescales(config, franson));
    if (!timescales.passed) {
      std::cerr << "warning: Franson timescale condition violated:\n";
      for (const auto& m : timescales.margins) {
        if (m.ratio() < 1.0) {
          std::cerr << "warning:   " << m.name << " = " << format_double(m.achieved)
                    << ", needs >= " << format_double(m.required) << "\n";
        }
      }
    }

    scan = simulate_franson_scan(config, franson, phases, options.pairs_per_point,
                                 options.seed);

    const std::int64_t bin = std::llround(config.histogram_bin_ps);
    const std::int64_t range = std::max(std::llround(config.histogram_range_ps),
                                        std::llround(franson.path_imbalance_ps) + 10 * bin);
    const double combined_jitter = std::hypot(config.detector_a.jitter_fwhm_ps,
                                              config.detector_b.jitter_fwhm_ps);
    const double window_ps =
        std::min(std::max(2.0 * combined_jitter, 4.0 * static_cast<double>(bin)),
                 0.8 * franson.path_imbalance_ps);
    const std::int64_t window_bins =
        std::max<std::int64_t>(1, std::llround(window_ps / static_cast<double>(bin)));

    std::vector<FransonRow> rows;
    std::vector<DataPoint> center_points;
    std::vector<double> left_counts;
    std::vector<double> right_counts;
    double background = 0.0;
    double background_var = 0.0;
    for (const FransonScanPoint& point : scan) {
      const Histogram h = build_histogram(point.stream, bin, range);
      const FransonPeaks peaks = franson_peak_counts(h, franson.path_imbalance_ps, window_ps);
      rows.push_back({point.phase_rad, peaks.left.counts, peaks.center.counts,
                      peaks.right.counts});
      center_points.push_back({point.phase_rad, static_cast<double>(peaks.center.counts),
                               poisson_sigma(static_cast<double>(peaks.center.counts))});
      left_counts.push_back(static_cast<double>(peaks.left.counts));
      right_counts.push_back(static_cast<double>(peaks.right.counts));

      const Window exclusions[3] = {
          {-franson.path_imbalance_ps, 2.0 * window_ps},
          {0.0, 2.0 * window_ps},
          {franson.path_imbalance_ps, 2.0 * window_ps},
      };
      const BackgroundLevel level = accidental_level(h, exclusions);
      background += level.mean_per_bin * static_cast<double>(window_bins);
      background_var += level.sigma * level.sigma *
                        static_cast<double>(window_bins) * static_cast<double>(window_bins);
    }
    background /= static_cast<double>(scan.size());
    const double background_sigma = std::sqrt(background_var) / static_cast<double>(scan.size());

    write_franson_csv(options.out_path, rows);

    Manifest manifest;
    manifest.command = "franson";
    manifest.config_digest = config_digest(config);
    manifest.seed = options.seed;
    manifest.outputs = {options.out_path};
    manifest.summary.emplace_back("timescale_check", timescales.passed ? "pass" : "fail");

    const double chi2_left = flatness_chi2(left_counts);
    const double chi2_right = flatness_chi2(right_counts);
    const double flat_dof = static_cast<double>(scan.size() - 1);
    const double flat_limit = flat_dof + 5.0 * std::sqrt(2.0 * flat_dof);
    std::cout << "satellite flatness chi2 (left, right) = " << format_double(chi2_left)
              << ", " << format_double(chi2_right) << " on " << format_double(flat_dof)
              << " dof (5-sigma limit " << format_double(flat_limit) << ")\n";
    manifest.summary.emplace_back("flatness_chi2_left", format_double(chi2_left));
    manifest.summary.emplace_back("flatness_chi2_right", format_double(chi2_right));
    manifest.checks.emplace_back("satellites_flat_5sigma",
                                 chi2_left <= flat_limit && chi2_right <= flat_limit);

    if (!options.fit) {
      manifest.write(output_directory(options.out_path));
      return kExitOk;
    }

    const RawNetResult fit =
        raw_and_net_visibility(center_points, background, background_sigma,
                               FitModel::fringe);
    const std::string fit_path = options.out_path + ".fit.csv";
    write_fit_report_csv(fit_path, fit.net_fit);
    manifest.outputs.push_back(fit_path);

    const BellResult bell = bell_from_visibility(fit.net.value, fit.net.sigma);
    const BellResult bell_raw = bell_from_visibility(fit.raw.value, fit.raw.sigma);

    std::cout << "raw visibility = " << format_double(fit.raw.value) << " +- "
              << format_double(fit.raw.sigma) << " (S = " << format_double(bell_raw.s_value)
              << ")\n";
    std::cout << "net visibility = " << format_double(fit.net.value) << " +- "
              << format_double(fit.net.sigma) << "\n";
    std::cout << "Bell S = " << format_double(bell.s_value) << " +- "
              << format_double(bell.sigma_s);
    if (bell.violation_sigmas.has_value()) {
      std::cout << ", violation = " << format_double(*bell.violation_sigmas) << " sigma";
    }
    std::cout << "\n";

    manifest.summary.emplace_back("v_raw", format_double(fit.raw.value));
    manifest.summary.emplace_back("v_raw_sigma", format_double(fit.raw.sigma));
    manifest.summary.emplace_back("v_net", format_double(fit.net.value));
    manifest.summary.emplace_back("v_net_sigma", format_double(fit.net.sigma));
    manifest.summary.emplace_back("s_value", format_double(bell.s_value));
    manifest.summary.emplace_back("s_sigma", format_double(bell.sigma_s));
    if (bell.violation_sigmas.has_value()) {
      manifest.summary.emplace_back("violation_sigmas",
                                    format_double(*bell.violation_sigmas));
      manifest.checks.emplace_back("bell_violation_at_least_5sigma",
                                   *bell.violation_sigmas >= 5.0);
    }
    manifest.write(output_directory(options.out_path));

    if (!fit.raw_fit.converged || !fit.net_fit.converged) {
      std::cerr << "error: fringe fit did not converge; best-so-far written\n";
      return kExitFitError;
    }
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

int cmd_report(const std::string& run_directory) {
  const fs::path dir(run_directory);
  const char* commands[3] = {"simulate-pairs", "hom", "franson"};
  std::vector<json> manifests;
  for (const char* command : commands) {
    const fs::path path = dir / (std::string(command) + ".manifest.json");
    if (!fs::exists(path)) continue;
    std::ifstream in(path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      std::cerr << "error: cannot parse " << path.string() << ": " << e.what() << "\n";
      return kExitConfigError;
    }
    manifests.push_back(std::move(j));
  }
  if (manifests.empty()) {
    std::cerr << "error: no run manifests found in '" << run_directory << "'\n";
    return kExitConfigError;
  }

  // Row order mirrors the headline table: CAR, HOM, Franson, Bell.
  const std::vector<std::pair<std::string, std::string>> layout = {
      {"simulate-pairs", "car"},          {"simulate-pairs", "car_oracle"},
      {"hom", "v_raw"},                   {"hom", "v_net"},
      {"hom", "dlambda_nm"},              {"franson", "v_raw"},
      {"franson", "v_net"},               {"franson", "s_value"},
      {"franson", "violation_sigmas"},
  };

  std::cout << "quantity                       value\n";
  bool all_checks_pass = true;
  for (const auto& [command, key] : layout) {
    for (const json& m : manifests) {
      if (m.value("command", "") != command) continue;
      const auto& summary = m.at("summary");
      if (!summary.contains(key)) continue;
      std::string label = command + "." + key;
      label.resize(30, ' ');
      std::cout << label << " " << summary.at(key).get<std::string>() << "\n";
    }
  }
  std::cout << "\nchecks:\n";
  for (const json& m : manifests) {
    for (const json& check : m.value("checks", json::array())) {
      const bool pass = check.value("pass", false);
      all_checks_pass = all_checks_pass && pass;
      std::cout << (pass ? "  PASS  " : "  FAIL  ")
                << m.value("command", "") << ": " << check.value("name", "") << "\n";
    }
  }
  if (!all_checks_pass) std::cout << "\nsome stored checks failed, see above\n";
  for (const json& m : manifests) {
    for (const auto& output : m.value("outputs", json::array())) {
      const fs::path path = output.get<std::string>();
      if (!fs::exists(path) && !fs::exists(dir / path)) {
        std::cerr << "warning: listed output missing: " << path.string() << "\n";
      }
    }
  }
  return kExitOk;
}

}  // namespace pairkit::cli
