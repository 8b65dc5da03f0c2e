#include "pairkit/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <vector>

#include "pairkit/errors.hpp"

namespace pairkit {

namespace {

// Nearest-bin index for a time difference, exact in integer arithmetic.
// Half-bin edges round away from zero so that negating every difference
// mirrors the histogram bin-for-bin.
std::int64_t bin_of(std::int64_t delta_ps, std::int64_t bin_ps) {
  const std::int64_t magnitude = std::abs(delta_ps);
  const std::int64_t k = (2 * magnitude + bin_ps) / (2 * bin_ps);
  return delta_ps < 0 ? -k : k;
}

// Index of the bin containing a (fractional) time, clamped to the histogram.
std::int64_t containing_bin_index(const Histogram& h, double time_ps) {
  const double k = std::round((time_ps - static_cast<double>(h.origin_ps)) /
                              static_cast<double>(h.bin_width_ps));
  const double clamped = std::clamp(k, -static_cast<double>(h.n_half),
                                    static_cast<double>(h.n_half));
  return static_cast<std::int64_t>(clamped) + h.n_half;
}

// A window of `width_ps` mapped onto whole bins: max(1, round(width/bin))
// bins starting at the bin containing the center (extra bin goes right for
// even counts). Returns {first, last} inclusive indices, unclamped.
std::pair<std::int64_t, std::int64_t> window_bins(const Histogram& h, const Window& w) {
  const std::int64_t m = std::max<std::int64_t>(
      1, std::llround(w.width_ps / static_cast<double>(h.bin_width_ps)));
  const std::int64_t center = containing_bin_index(h, w.center_ps);
  const std::int64_t first = center - (m - 1) / 2;
  return {first, first + m - 1};
}

std::int64_t sum_bins(const Histogram& h, std::int64_t first, std::int64_t last) {
  std::int64_t total = 0;
  for (std::int64_t j = first; j <= last; ++j) total += h.counts[static_cast<std::size_t>(j)];
  return total;
}

}  // namespace

Histogram build_histogram(const EventStream& stream, std::int64_t bin_ps,
                          std::int64_t range_ps) {
  if (bin_ps <= 0) throw Error(ErrorCode::domain_error, "histogram bin must be > 0 ps");
  if (range_ps < 10 * bin_ps) {
    throw Error(ErrorCode::domain_error, "histogram range must be >= 10 * bin");
  }

  std::vector<std::int64_t> a_times;
  std::vector<std::int64_t> b_times;
  std::int64_t previous = std::numeric_limits<std::int64_t>::min();
  for (const Event& e : stream.events) {
    if (e.time_ps < previous) {
      throw Error(ErrorCode::unsorted_stream, "event stream times must be non-decreasing");
    }
    previous = e.time_ps;
    (e.channel == Channel::A ? a_times : b_times).push_back(e.time_ps);
  }

  Histogram h;
  h.bin_width_ps = bin_ps;
  h.origin_ps = 0;
  // Only whole bins are kept, so the outermost accepted difference is
  // n_half*bin + bin/2 - 1 <= range.
  h.n_half = (2 * range_ps - bin_ps) / (2 * bin_ps);
  h.counts.assign(static_cast<std::size_t>(2 * h.n_half + 1), 0);

  const std::int64_t max_delta = h.n_half * bin_ps + bin_ps / 2;
  std::size_t lo = 0;
  for (const std::int64_t ta : a_times) {
    while (lo < b_times.size() && b_times[lo] < ta - max_delta) ++lo;
    for (std::size_t j = lo; j < b_times.size() && b_times[j] <= ta + max_delta; ++j) {
      const std::int64_t k = bin_of(b_times[j] - ta, bin_ps);
      if (k >= -h.n_half && k <= h.n_half) {
        ++h.counts[static_cast<std::size_t>(k + h.n_half)];
        ++h.total_pairs_considered;
      }
    }
  }
  return h;
}

Window peak_window(const Histogram& h) {
  if (h.counts.empty()) throw Error(ErrorCode::no_peak, "empty histogram");

  std::vector<std::int64_t> sorted(h.counts);
  const std::size_t mid = sorted.size() / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
  const double median = static_cast<double>(sorted[mid]);

  const auto max_it = std::max_element(h.counts.begin(), h.counts.end());
  const double peak = static_cast<double>(*max_it);
  const std::int64_t peak_idx = max_it - h.counts.begin();
  if (peak <= 0.0 || peak < median + 5.0 * std::sqrt(median)) {
    throw Error(ErrorCode::no_peak, "no bin rises significantly above the median floor");
  }

  const double half_level = median + (peak - median) / 2.0;

  // Contiguous region around the mode at or above half height.
  std::int64_t lo = peak_idx;
  while (lo > 0 && static_cast<double>(h.counts[static_cast<std::size_t>(lo - 1)]) >= half_level) --lo;
  std::int64_t hi = peak_idx;
  const std::int64_t last = h.num_bins() - 1;
  while (hi < last && static_cast<double>(h.counts[static_cast<std::size_t>(hi + 1)]) >= half_level) ++hi;

  double weight_sum = 0.0;
  double weighted_center = 0.0;
  for (std::int64_t j = lo; j <= hi; ++j) {
    const double w = std::max(0.0, static_cast<double>(h.counts[static_cast<std::size_t>(j)]) - median);
    weight_sum += w;
    weighted_center += w * static_cast<double>(h.bin_center_ps(j));
  }
  const double center = weighted_center / weight_sum;

  const double bin = static_cast<double>(h.bin_width_ps);
  // Sub-bin crossings by linear interpolation; fall back to the bin edge
  // when the region touches the histogram boundary.
  double left = static_cast<double>(h.bin_center_ps(lo)) - bin / 2.0;
  if (lo > 0) {
    const double outer = static_cast<double>(h.counts[static_cast<std::size_t>(lo - 1)]);
    const double inner = static_cast<double>(h.counts[static_cast<std::size_t>(lo)]);
    left = static_cast<double>(h.bin_center_ps(lo - 1)) +
           (half_level - outer) / (inner - outer) * bin;
  }
  double right = static_cast<double>(h.bin_center_ps(hi)) + bin / 2.0;
  if (hi < last) {
    const double inner = static_cast<double>(h.counts[static_cast<std::size_t>(hi)]);
    const double outer = static_cast<double>(h.counts[static_cast<std::size_t>(hi + 1)]);
    right = static_cast<double>(h.bin_center_ps(hi)) +
            (half_level - inner) / (outer - inner) * bin;
  }

  return Window{center, right - left};
}

CarResult compute_car(const Histogram& h, const Window& w) {
  const auto [first, last] = window_bins(h, w);
  if (first < 0 || last >= h.num_bins()) {
    throw Error(ErrorCode::domain_error, "peak window falls outside the histogram");
  }
  const std::int64_t m = last - first + 1;

  CarResult result;
  result.window_bins = m;
  result.peak_first_bin = first;
  result.peak_last_bin = last;
  result.peak_counts = sum_bins(h, first, last);

  // Background windows tile outward from the peak region padded by two
  // window widths on each side.
  const std::int64_t excl_first = first - 2 * m;
  const std::int64_t excl_last = last + 2 * m;
  for (std::int64_t start = excl_first - m; start >= 0; start -= m) {
    result.background_total += sum_bins(h, start, start + m - 1);
    ++result.background_windows;
  }
  for (std::int64_t start = excl_last + 1; start + m - 1 < h.num_bins(); start += m) {
    result.background_total += sum_bins(h, start, start + m - 1);
    ++result.background_windows;
  }
  if (result.background_windows == 0) {
    throw Error(ErrorCode::domain_error,
                "no disjoint background window of the peak width fits in the histogram");
  }

  result.background_counts =
      static_cast<double>(result.background_total) / result.background_windows;
  if (result.background_total == 0) {
    if (result.peak_counts > 0) {
      throw Error(ErrorCode::no_background,
                  "zero background counts with a nonzero peak: CAR is unbounded");
    }
    result.car = 1.0;  // empty histogram, vacuous flat expectation
    result.sigma = 0.0;
    return result;
  }

  result.car = static_cast<double>(result.peak_counts) / result.background_counts;
  if (result.peak_counts > 0) {
    result.sigma = result.car * std::sqrt(1.0 / static_cast<double>(result.peak_counts) +
                                          1.0 / static_cast<double>(result.background_total));
  } else {
    result.sigma = 1.0 / result.background_counts;  // one-count scale
  }
  return result;
}

FransonPeaks franson_peak_counts(const Histogram& h, double delta_t_ps, double window_ps) {
  if (window_ps <= 0.0) throw Error(ErrorCode::domain_error, "window must be > 0 ps");
  if (window_ps >= delta_t_ps) {
    throw Error(ErrorCode::overlapping_windows,
                "window of " + std::to_string(window_ps) + " ps overlaps peaks spaced " +
                    std::to_string(delta_t_ps) + " ps apart");
  }

  FransonPeaks peaks;
  const double centers[3] = {-delta_t_ps, 0.0, delta_t_ps};
  WindowCounts* out[3] = {&peaks.left, &peaks.center, &peaks.right};
  for (int i = 0; i < 3; ++i) {
    const auto [first, last] = window_bins(h, Window{centers[i], window_ps});
    if (first < 0 || last >= h.num_bins()) {
      throw Error(ErrorCode::domain_error, "peak window falls outside the histogram");
    }
    out[i]->counts = sum_bins(h, first, last);
    out[i]->sigma = std::sqrt(static_cast<double>(out[i]->counts));
  }
  return peaks;
}

BackgroundLevel accidental_level(const Histogram& h, std::span<const Window> exclusions) {
  const double bin = static_cast<double>(h.bin_width_ps);
  std::vector<double> kept;
  kept.reserve(h.counts.size());
  for (std::int64_t j = 0; j < h.num_bins(); ++j) {
    const double center = static_cast<double>(h.bin_center_ps(j));
    bool excluded = false;
    for (const Window& w : exclusions) {
      // Drop any bin overlapping the exclusion window.
      if (std::abs(center - w.center_ps) <= (w.width_ps + bin) / 2.0) {
        excluded = true;
        break;
      }
    }
    if (!excluded) kept.push_back(static_cast<double>(h.counts[static_cast<std::size_t>(j)]));
  }

  if (kept.size() < 20) {
    throw Error(ErrorCode::insufficient_background,
                "fewer than 20 bins remain outside the exclusion windows");
  }

  BackgroundLevel level;
  level.bins_used = static_cast<std::int64_t>(kept.size());
  double sum = 0.0;
  for (double v : kept) sum += v;
  level.mean_per_bin = sum / static_cast<double>(kept.size());
  double ss = 0.0;
  for (double v : kept) ss += (v - level.mean_per_bin) * (v - level.mean_per_bin);
  const double sample_var = ss / static_cast<double>(kept.size() - 1);
  level.sigma = std::sqrt(sample_var / static_cast<double>(kept.size()));
  return level;
}

}  // namespace pairkit
