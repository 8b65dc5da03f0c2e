#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "pairkit/analytic.hpp"
#include "pairkit/errors.hpp"
#include "pairkit/histogram.hpp"
#include "pairkit/io.hpp"
#include "pairkit/mc_engine.hpp"

using namespace pairkit;

namespace {

ExperimentConfig clean_config() {
  ExperimentConfig c;
  c.detector_a.dark_rate_hz = 0.0;
  c.detector_b.dark_rate_hz = 0.0;
  c.detector_a.dead_time_ns = 0.0;
  c.detector_b.dead_time_ns = 0.0;
  return c;
}

std::vector<std::int64_t> channel_times(const EventStream& s, Channel ch) {
  std::vector<std::int64_t> out;
  for (const Event& e : s.events) {
    if (e.channel == ch) out.push_back(e.time_ps);
  }
  return out;
}

bool is_subsequence(const std::vector<std::int64_t>& sub,
                    const std::vector<std::int64_t>& full) {
  std::size_t i = 0;
  for (std::int64_t t : full) {
    if (i < sub.size() && sub[i] == t) ++i;
  }
  return i == sub.size();
}

// Expected singles per point of a HOM scan, used to predict accidentals.
double hom_expected_singles(double pairs, double p_cross, double efficiency) {
  const double click_same = 1.0 - (1.0 - efficiency) * (1.0 - efficiency);
  return pairs * (p_cross * efficiency + (1.0 - p_cross) * 0.5 * click_same);
}

}  // namespace

TEST_CASE("identical config and seed give byte-identical streams") {
  ExperimentConfig c = clean_config();
  c.duration_s = 0.05;
  const EventStream a = simulate_pair_stream(c, 42);
  const EventStream b = simulate_pair_stream(c, 42);
  CHECK(a.events == b.events);
  CHECK(a.config_digest == b.config_digest);

  const EventStream other = simulate_pair_stream(c, 43);
  CHECK(a.events != other.events);
}

TEST_CASE("no pairs and no darks produce an empty stream") {
  ExperimentConfig c = clean_config();
  c.source.pair_rate_hz = 0.0;
  const EventStream s = simulate_pair_stream(c, 1);
  CHECK(s.events.empty());
}

TEST_CASE("singles counts follow the Poisson thinning expectation") {
  ExperimentConfig c = clean_config();
  c.duration_s = 1.0;  // 7.2e6 pairs/s at 10% efficiency
  const EventStream s = simulate_pair_stream(c, 7);
  const double expected = 7.2e5;
  const double tolerance = 5.0 * std::sqrt(expected);
  CHECK(std::abs(static_cast<double>(s.singles(Channel::A)) - expected) < tolerance);
  CHECK(std::abs(static_cast<double>(s.singles(Channel::B)) - expected) < tolerance);
}

TEST_CASE("singles scale linearly with efficiency") {
  ExperimentConfig c = clean_config();
  c.duration_s = 0.5;
  c.detector_a.efficiency = 0.05;
  const EventStream s = simulate_pair_stream(c, 7);
  const double expected = 7.2e6 * 0.5 * 0.05;
  CHECK(std::abs(static_cast<double>(s.singles(Channel::A)) - expected) <
        5.0 * std::sqrt(expected));
}

TEST_CASE("all event times lie inside the run and are sorted") {
  ExperimentConfig c = clean_config();
  c.duration_s = 0.01;
  c.detector_a.dark_rate_hz = 5e4;
  c.detector_b.dark_rate_hz = 5e4;
  const EventStream s = simulate_pair_stream(c, 3);
  const std::int64_t duration_ps = std::llround(c.duration_s * 1e12);
  std::int64_t previous = 0;
  for (const Event& e : s.events) {
    CHECK(e.time_ps >= 0);
    CHECK(e.time_ps <= duration_ps);
    CHECK(e.time_ps >= previous);
    previous = e.time_ps;
  }
}

TEST_CASE("dead time enforces the minimum same-channel separation") {
  ExperimentConfig c = clean_config();
  c.duration_s = 0.02;
  c.detector_a.dead_time_ns = 1000.0;
  c.detector_b.dead_time_ns = 1000.0;
  const EventStream filtered = simulate_pair_stream(c, 11);
  for (Channel ch : {Channel::A, Channel::B}) {
    const auto times = channel_times(filtered, ch);
    for (std::size_t i = 1; i < times.size(); ++i) {
      CHECK(times[i] - times[i - 1] >= 1'000'000);
    }
  }

  // Removing the filter only adds events, never moves them.
  ExperimentConfig unfiltered_config = c;
  unfiltered_config.detector_a.dead_time_ns = 0.0;
  unfiltered_config.detector_b.dead_time_ns = 0.0;
  const EventStream unfiltered = simulate_pair_stream(unfiltered_config, 11);
  CHECK(unfiltered.events.size() >= filtered.events.size());
  for (Channel ch : {Channel::A, Channel::B}) {
    CHECK(is_subsequence(channel_times(filtered, ch), channel_times(unfiltered, ch)));
  }
}

TEST_CASE("over-budget runs fail fast with a capacity error") {
  ExperimentConfig c = clean_config();
  c.source.pair_rate_hz = 1e7;
  c.duration_s = 100.0;
  CHECK_THROWS_AS(simulate_pair_stream(c, 1), Error);
}

TEST_CASE("two half-duration streams merge into one full-duration stream") {
  ExperimentConfig c = clean_config();
  c.source.pair_rate_hz = 1e6;
  c.detector_a.efficiency = 0.3;
  c.detector_b.efficiency = 0.3;
  c.duration_s = 1.0;
  const EventStream full = simulate_pair_stream(c, 101);

  ExperimentConfig half = c;
  half.duration_s = 0.5;
  const EventStream h1 = simulate_pair_stream(half, 102);
  const EventStream h2 = simulate_pair_stream(half, 103);

  EventStream merged;
  merged.duration_s = 1.0;
  merged.events = h1.events;
  for (const Event& e : h2.events) {
    merged.events.push_back({e.time_ps + 500'000'000'000, e.channel});
  }
  std::sort(merged.events.begin(), merged.events.end(), [](const Event& x, const Event& y) {
    return x.time_ps != y.time_ps ? x.time_ps < y.time_ps : x.channel < y.channel;
  });

  auto z_score = [](double n1, double n2) {
    return std::abs(n1 - n2) / std::sqrt(n1 + n2);
  };
  CHECK(z_score(static_cast<double>(full.singles(Channel::A)),
                static_cast<double>(merged.singles(Channel::A))) < 5.0);
  CHECK(z_score(static_cast<double>(full.singles(Channel::B)),
                static_cast<double>(merged.singles(Channel::B))) < 5.0);

  const Histogram hf = build_histogram(full, 164, 20000);
  const Histogram hm = build_histogram(merged, 164, 20000);
  CHECK(z_score(static_cast<double>(hf.total_pairs_considered),
                static_cast<double>(hm.total_pairs_considered)) < 5.0);

  // Two-sample chi-square over the central bins, where counts are healthy.
  double chi2 = 0.0;
  int dof = 0;
  for (std::int64_t j = hf.n_half - 20; j <= hf.n_half + 20; ++j) {
    const double n1 = static_cast<double>(hf.counts[static_cast<std::size_t>(j)]);
    const double n2 = static_cast<double>(hm.counts[static_cast<std::size_t>(j)]);
    if (n1 + n2 < 10.0) continue;
    chi2 += (n1 - n2) * (n1 - n2) / (n1 + n2);
    ++dof;
  }
  REQUIRE(dof > 10);
  CHECK(chi2 < dof + 5.0 * std::sqrt(2.0 * dof));
}

TEST_CASE("far outside the dip half of the detected pairs coincide") {
  ExperimentConfig c = clean_config();
  c.facets.reflectivity = 0.0;
  HomConfig hom;
  hom.delays_ps = {10.0};
  hom.intrinsic_visibility = 1.0;

  const std::int64_t pairs = 100000;
  const auto points = simulate_hom_scan(c, hom, pairs, 5);
  REQUIRE(points.size() == 1);

  const double x = 2.0 * std::numbers::pi * 10e-12 * 10.8e-9 * kSpeedOfLightMps /
                   (1566e-9 * 1566e-9);
  const double p_cross = 0.5 * (1.0 - sinc(x));
  const double expected_true = pairs * p_cross * 0.01;
  const double t_point = pairs / 7.2e6;
  const double singles = hom_expected_singles(pairs, p_cross, 0.1);
  const double expected_acc =
      singles * singles / t_point * scan_coincidence_window_ps(c) * 1e-12;
  const double expected = expected_true + expected_acc;
  CHECK(std::abs(static_cast<double>(points[0].coincidences) - expected) <
        5.0 * std::sqrt(expected));
  CHECK(std::abs(static_cast<double>(points[0].singles_a) - singles) <
        5.0 * std::sqrt(singles));
}

TEST_CASE("perfect interference at zero delay suppresses coincidences") {
  ExperimentConfig c = clean_config();
  c.facets.reflectivity = 0.0;
  HomConfig hom;
  hom.delays_ps = {0.0};
  const auto points = simulate_hom_scan(c, hom, 100000, 5);

  const double singles = hom_expected_singles(100000, 0.0, 0.1);
  const double t_point = 100000 / 7.2e6;
  const double expected_acc =
      singles * singles / t_point * scan_coincidence_window_ps(c) * 1e-12;
  CHECK(static_cast<double>(points[0].coincidences) <
        expected_acc + 5.0 * std::sqrt(expected_acc + 1.0));
}

TEST_CASE("facet reflections leave the Eq.-2 coincidence floor at zero delay") {
  ExperimentConfig c = clean_config();  // R = 0.24, eta = 0.6925 each
  HomConfig hom;
  hom.delays_ps = {0.0};
  const std::int64_t pairs = 1000000;
  const auto points = simulate_hom_scan(c, hom, pairs, 9);

  const double leak = 1.0 - visibility_bound(c.facets);  // 0.095
  const double expected_true = pairs * 0.5 * leak * 0.01;
  const double p_cross = 0.5 * leak;
  const double singles = hom_expected_singles(pairs, p_cross, 0.1);
  const double t_point = pairs / 7.2e6;
  const double expected_acc =
      singles * singles / t_point * scan_coincidence_window_ps(c) * 1e-12;
  const double expected = expected_true + expected_acc;
  CHECK(std::abs(static_cast<double>(points[0].coincidences) - expected) <
        5.0 * std::sqrt(expected));
}

TEST_CASE("hom scan is deterministic and ordered by delay") {
  ExperimentConfig c = clean_config();
  HomConfig hom;
  hom.delays_ps = {2.0, -1.0, 0.5};
  const auto a = simulate_hom_scan(c, hom, 10000, 21);
  const auto b = simulate_hom_scan(c, hom, 10000, 21);
  REQUIRE(a.size() == 3);
  CHECK(a[0].control == -1.0);
  CHECK(a[2].control == 2.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].coincidences == b[i].coincidences);
    CHECK(a[i].singles_a == b[i].singles_a);
  }
}

namespace {

ExperimentConfig franson_config() {
  ExperimentConfig c = clean_config();
  c.source.pair_rate_hz = 1e5;  // long point duration keeps accidentals negligible
  c.detector_a.efficiency = 0.5;
  c.detector_b.efficiency = 0.5;
  c.detector_a.jitter_fwhm_ps = 100.0;
  c.detector_b.jitter_fwhm_ps = 100.0;
  return c;
}

}  // namespace

TEST_CASE("franson central window empties at phi = pi/2 with unit visibility") {
  ExperimentConfig c = franson_config();
  c.source.pump_coherence_ps = 1e9;  // make exp(-dt/tau_p) negligible
  FransonConfig franson;
  franson.intrinsic_visibility = 1.0;
  const auto scan =
      simulate_franson_scan(c, franson, {std::numbers::pi / 2.0}, 40000, 31);
  REQUIRE(scan.size() == 1);
  const Histogram h = build_histogram(scan[0].stream, 164, 50000);
  const FransonPeaks peaks = franson_peak_counts(h, 2500.0, 600.0);
  CHECK(peaks.center.counts <= 5);
  CHECK(peaks.left.counts > 400);  // satellites unaffected: 40000/16 * 0.25
  CHECK(peaks.right.counts > 400);
}

TEST_CASE("franson central-to-satellite ratio is 4:1 at phi = 0") {
  ExperimentConfig c = franson_config();
  c.source.pump_coherence_ps = 1e9;
  FransonConfig franson;
  franson.intrinsic_visibility = 1.0;
  const auto scan = simulate_franson_scan(c, franson, {0.0}, 40000, 33);
  const Histogram h = build_histogram(scan[0].stream, 164, 50000);
  const FransonPeaks peaks = franson_peak_counts(h, 2500.0, 600.0);

  const double center = static_cast<double>(peaks.center.counts);
  const double sides = static_cast<double>(peaks.left.counts + peaks.right.counts);
  const double ratio = center / sides;
  const double sigma = ratio * std::sqrt(1.0 / center + 1.0 / sides);
  CHECK(std::abs(ratio - 2.0) < 5.0 * sigma);  // weights (1/16, 1/4, 1/16)
}

TEST_CASE("zero visibility gives the incoherent 2:1 central-to-satellite ratio") {
  ExperimentConfig c = franson_config();
  FransonConfig franson;
  franson.intrinsic_visibility = 0.0;
  const auto scan = simulate_franson_scan(c, franson, {1.3}, 40000, 35);
  const Histogram h = build_histogram(scan[0].stream, 164, 50000);
  const FransonPeaks peaks = franson_peak_counts(h, 2500.0, 600.0);

  const double center = static_cast<double>(peaks.center.counts);
  const double side = static_cast<double>(peaks.left.counts);
  const double ratio = center / side;
  const double sigma = ratio * std::sqrt(1.0 / center + 1.0 / side);
  CHECK(std::abs(ratio - 2.0) < 5.0 * sigma);
}

TEST_CASE("satellite peaks are flat across a phase scan") {
  ExperimentConfig c = franson_config();
  FransonConfig franson;
  franson.intrinsic_visibility = 0.956;
  std::vector<double> phases;
  for (int i = 0; i < 12; ++i) phases.push_back(i * std::numbers::pi / 12.0);
  const auto scan = simulate_franson_scan(c, franson, phases, 40000, 37);
  REQUIRE(scan.size() == 12);

  for (bool left : {true, false}) {
    std::vector<double> counts;
    for (const auto& point : scan) {
      const Histogram h = build_histogram(point.stream, 164, 50000);
      const FransonPeaks peaks = franson_peak_counts(h, 2500.0, 600.0);
      counts.push_back(static_cast<double>(left ? peaks.left.counts : peaks.right.counts));
    }
    double mean = 0.0;
    for (double v : counts) mean += v;
    mean /= static_cast<double>(counts.size());
    double chi2 = 0.0;
    for (double v : counts) chi2 += (v - mean) * (v - mean) / mean;
    const double dof = static_cast<double>(counts.size() - 1);
    CHECK(chi2 < dof + 5.0 * std::sqrt(2.0 * dof));
  }
}

TEST_CASE("a short pump coherence time washes out the interference") {
  ExperimentConfig c = franson_config();
  c.source.pump_coherence_ps = 5000.0;  // exp(-2500/5000) = 0.6065
  FransonConfig franson;
  franson.intrinsic_visibility = 1.0;
  const auto scan =
      simulate_franson_scan(c, franson, {std::numbers::pi / 2.0}, 40000, 39);
  const Histogram h = build_histogram(scan[0].stream, 164, 50000);
  const FransonPeaks peaks = franson_peak_counts(h, 2500.0, 600.0);

  const double v_eff = std::exp(-0.5);
  const double expected = 40000.0 * (1.0 - v_eff) / 8.0 * 0.25;
  CHECK(std::abs(static_cast<double>(peaks.center.counts) - expected) <
        5.0 * std::sqrt(expected));
}

TEST_CASE("franson scan is reproducible and thread-count independent") {
  ExperimentConfig c = franson_config();
  FransonConfig franson;
  std::vector<double> phases{0.0, 0.7, 1.4, 2.1};

  setenv("PAIRKIT_THREADS", "1", 1);
  const auto serial = simulate_franson_scan(c, franson, phases, 5000, 41);
  setenv("PAIRKIT_THREADS", "3", 1);
  const auto threaded = simulate_franson_scan(c, franson, phases, 5000, 41);
  unsetenv("PAIRKIT_THREADS");

  REQUIRE(serial.size() == threaded.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].stream.events == threaded[i].stream.events);
  }
}

TEST_CASE("event CSV round-trips and rejects unsorted input") {
  ExperimentConfig c = clean_config();
  c.duration_s = 0.001;
  c.detector_a.dark_rate_hz = 1e4;
  const EventStream s = simulate_pair_stream(c, 55);
  REQUIRE(!s.events.empty());

  const auto dir = std::filesystem::temp_directory_path() / "pairkit_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "events.csv";
  write_events_csv(path, s);
  const EventStream back = read_events_csv(path);
  CHECK(back.events == s.events);

  const auto bad = dir / "unsorted.csv";
  {
    std::ofstream out(bad);
    out << "channel,time_ps\nA,100\nB,50\n";
  }
  CHECK_THROWS_AS(read_events_csv(bad), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("histogram CSV round-trips exactly") {
  ExperimentConfig c = clean_config();
  c.duration_s = 0.005;
  const EventStream s = simulate_pair_stream(c, 77);
  const Histogram h = build_histogram(s, 164, 10000);

  const auto dir = std::filesystem::temp_directory_path() / "pairkit_io_test2";
  std::filesystem::create_directories(dir);
  const auto path = dir / "hist.csv";
  write_histogram_csv(path, h);
  const Histogram back = read_histogram_csv(path);
  CHECK(back.counts == h.counts);
  CHECK(back.bin_width_ps == h.bin_width_ps);
  CHECK(back.n_half == h.n_half);
  CHECK(back.origin_ps == h.origin_ps);
  std::filesystem::remove_all(dir);
}
