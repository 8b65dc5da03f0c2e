#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pairkit/events.hpp"

namespace pairkit {

// Binned counts of cross-channel detection time differences t_B - t_A.
// Bin k (k in [-n_half, +n_half]) is centered at origin + k * bin_width and
// stored at index k + n_half. Differences in |dt| <= range are kept; exact
// half-bin edges round away from zero so a time-reversed stream mirrors
// bin-for-bin.
struct Histogram {
  std::int64_t bin_width_ps = 0;
  std::int64_t origin_ps = 0;  // center of bin 0
  std::int64_t n_half = 0;
  std::vector<std::int64_t> counts;  // size 2*n_half + 1
  std::int64_t total_pairs_considered = 0;

  std::int64_t num_bins() const { return static_cast<std::int64_t>(counts.size()); }
  std::int64_t bin_center_ps(std::int64_t index) const {
    return origin_ps + (index - n_half) * bin_width_ps;
  }
};

struct Window {
  double center_ps = 0.0;
  double width_ps = 0.0;
};

struct CarResult {
  double car = 0.0;
  double sigma = 0.0;
  std::int64_t peak_counts = 0;
  double background_counts = 0.0;    // mean counts per background window
  std::int64_t background_total = 0; // summed over all background windows
  int background_windows = 0;
  std::int64_t window_bins = 0;      // window width used, in bins
  std::int64_t peak_first_bin = 0;   // inclusive index range actually summed
  std::int64_t peak_last_bin = 0;
};

struct WindowCounts {
  std::int64_t counts = 0;
  double sigma = 0.0;  // sqrt(counts)
};

struct FransonPeaks {
  WindowCounts left;    // window at -delta_t
  WindowCounts center;  // window at 0
  WindowCounts right;   // window at +delta_t
};

struct BackgroundLevel {
  double mean_per_bin = 0.0;
  double sigma = 0.0;  // standard error of the mean
  std::int64_t bins_used = 0;
};

// Full cross-correlation of A against B events (every pairing within range,
// not start-stop), binned at `bin_ps`. Requires a sorted stream, bin > 0 and
// range >= 10 * bin. Throws ErrorCode::unsorted_stream / domain_error.
Histogram build_histogram(const EventStream& stream, std::int64_t bin_ps,
                          std::int64_t range_ps);

// Locates the coincidence peak: center is the count-weighted centroid of the
// bins above half height, width the FWHM from linear interpolation at half
// of (peak - floor), floor being the median bin count. Throws
// ErrorCode::no_peak when max < median + 5*sqrt(median) or the histogram is
// empty.
Window peak_window(const Histogram& h);

// Coincidence-to-accidental ratio: peak counts inside `w` over the mean
// counts of all disjoint same-width windows outside the peak region padded
// by two window widths on each side. Sigma by Poisson propagation,
// car * sqrt(1/peak + 1/background_total).
CarResult compute_car(const Histogram& h, const Window& w);

// Window sums at -delta_t, 0 and +delta_t, each `window_ps` wide, with
// Poisson sigmas. Throws ErrorCode::overlapping_windows when window >=
// delta_t and domain_error when a window falls outside the histogram.
FransonPeaks franson_peak_counts(const Histogram& h, double delta_t_ps,
                                 double window_ps);

// Mean and standard error of counts per bin outside all exclusion windows.
// Throws ErrorCode::insufficient_background when fewer than 20 bins remain.
BackgroundLevel accidental_level(const Histogram& h, std::span<const Window> exclusions);

}  // namespace pairkit
