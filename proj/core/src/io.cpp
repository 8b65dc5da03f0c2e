#include "pairkit/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "pairkit/errors.hpp"

namespace pairkit {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // '\n' endings everywhere
  if (!out) {
    throw Error(ErrorCode::domain_error, "cannot open '" + path.string() + "' for writing");
  }
  return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::domain_error, "cannot open '" + path.string() + "' for reading");
  }
  return in;
}

void expect_header(std::ifstream& in, const std::string& expected,
                   const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line) || line != expected) {
    throw Error(ErrorCode::invalid_value,
                path.string() + ": expected header '" + expected + "'");
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_events_csv(const std::filesystem::path& path, const EventStream& stream) {
  std::ofstream out = open_for_write(path);
  out << "channel,time_ps\n";
  char buf[64];
  for (const Event& e : stream.events) {
    std::snprintf(buf, sizeof(buf), "%c,%" PRId64 "\n", channel_label(e.channel), e.time_ps);
    out << buf;
  }
}

EventStream read_events_csv(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  expect_header(in, "channel,time_ps", path);

  EventStream stream;
  std::string line;
  std::int64_t previous = std::numeric_limits<std::int64_t>::min();
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    char channel = 0;
    std::int64_t t = 0;
    if (std::sscanf(line.c_str(), "%c,%" SCNd64, &channel, &t) != 2 ||
        (channel != 'A' && channel != 'B')) {
      throw Error(ErrorCode::invalid_value,
                  path.string() + ":" + std::to_string(line_no) + ": bad event row");
    }
    if (t < previous) {
      throw Error(ErrorCode::unsorted_stream,
                  path.string() + ":" + std::to_string(line_no) + ": times must be sorted");
    }
    previous = t;
    stream.events.push_back({t, channel == 'A' ? Channel::A : Channel::B});
  }
  if (!stream.events.empty()) {
    stream.duration_s = static_cast<double>(stream.events.back().time_ps) / 1e12;
  }
  return stream;
}

void write_histogram_csv(const std::filesystem::path& path, const Histogram& h) {
  std::ofstream out = open_for_write(path);
  out << "bin_center_ps,counts\n";
  char buf[80];
  for (std::int64_t j = 0; j < h.num_bins(); ++j) {
    std::snprintf(buf, sizeof(buf), "%" PRId64 ",%" PRId64 "\n", h.bin_center_ps(j),
                  h.counts[static_cast<std::size_t>(j)]);
    out << buf;
  }
}

Histogram read_histogram_csv(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  expect_header(in, "bin_center_ps,counts", path);

  std::vector<std::int64_t> centers;
  std::vector<std::int64_t> counts;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::int64_t center = 0;
    std::int64_t count = 0;
    if (std::sscanf(line.c_str(), "%" SCNd64 ",%" SCNd64, &center, &count) != 2 || count < 0) {
      throw Error(ErrorCode::invalid_value,
                  path.string() + ":" + std::to_string(line_no) + ": bad histogram row");
    }
    centers.push_back(center);
    counts.push_back(count);
  }
  if (centers.size() < 2) {
    throw Error(ErrorCode::invalid_value, path.string() + ": histogram needs >= 2 bins");
  }
  const std::int64_t step = centers[1] - centers[0];
  if (step <= 0) {
    throw Error(ErrorCode::invalid_value, path.string() + ": bin centers must increase");
  }
  for (std::size_t i = 1; i < centers.size(); ++i) {
    if (centers[i] - centers[i - 1] != step) {
      throw Error(ErrorCode::invalid_value, path.string() + ": bin step must be constant");
    }
  }

  Histogram h;
  h.bin_width_ps = step;
  h.n_half = static_cast<std::int64_t>(centers.size()) / 2;
  h.origin_ps = centers[static_cast<std::size_t>(h.n_half)];
  h.counts = std::move(counts);
  for (std::int64_t c : h.counts) h.total_pairs_considered += c;
  return h;
}

void write_hom_scan_csv(const std::filesystem::path& path,
                        std::span<const ScanPoint> points) {
  std::ofstream out = open_for_write(path);
  out << "delay_ps,coincidences,sigma\n";
  for (const ScanPoint& p : points) {
    out << format_double(p.control) << ',' << p.coincidences << ','
        << format_double(poisson_sigma(static_cast<double>(p.coincidences))) << '\n';
  }
}

void write_franson_csv(const std::filesystem::path& path,
                       std::span<const FransonRow> rows) {
  std::ofstream out = open_for_write(path);
  out << "phase_rad,left,center,right\n";
  for (const FransonRow& r : rows) {
    out << format_double(r.phase_rad) << ',' << r.left << ',' << r.center << ','
        << r.right << '\n';
  }
}

void write_fit_report_csv(const std::filesystem::path& path, const FitResult& fit) {
  std::ofstream out = open_for_write(path);
  out << "parameter,value,sigma\n";
  for (std::size_t i = 0; i < fit.values.size(); ++i) {
    out << fit.names[i] << ',' << format_double(fit.value(i)) << ','
        << format_double(fit.sigma(i)) << '\n';
  }
  const double reduced = fit.dof > 0 ? fit.chi2 / static_cast<double>(fit.dof) : 0.0;
  out << "chi2/dof," << format_double(reduced) << ",\n";
}

}  // namespace pairkit
