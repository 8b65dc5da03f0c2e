#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pairkit/events.hpp"
#include "pairkit/fitting.hpp"
#include "pairkit/histogram.hpp"

namespace pairkit {

// File formats. All writers emit '\n' line endings and fixed formatting so
// identical inputs give byte-identical files.

// "channel,time_ps", channels A/B, integer times, sorted.
void write_events_csv(const std::filesystem::path& path, const EventStream& stream);

// Rejects unsorted input with ErrorCode::unsorted_stream.
EventStream read_events_csv(const std::filesystem::path& path);

// "bin_center_ps,counts", exact integers, constant step.
void write_histogram_csv(const std::filesystem::path& path, const Histogram& h);
Histogram read_histogram_csv(const std::filesystem::path& path);

// "delay_ps,coincidences,sigma" for HOM scans.
void write_hom_scan_csv(const std::filesystem::path& path,
                        std::span<const ScanPoint> points);

// "phase_rad,left,center,right" per Franson phase setting.
struct FransonRow {
  double phase_rad = 0.0;
  std::int64_t left = 0;
  std::int64_t center = 0;
  std::int64_t right = 0;
};
void write_franson_csv(const std::filesystem::path& path,
                       std::span<const FransonRow> rows);

// "parameter,value,sigma" rows followed by a "chi2/dof" row whose value is
// the reduced chi2 and whose sigma column is empty.
void write_fit_report_csv(const std::filesystem::path& path, const FitResult& fit);

// Fixed shortest-roundtrip formatting used by every writer.
std::string format_double(double v);

}  // namespace pairkit
