#pragma once

#include <cstdint>
#include <vector>

namespace pairkit {

enum class Channel : std::uint8_t { A = 0, B = 1 };

inline char channel_label(Channel c) { return c == Channel::A ? 'A' : 'B'; }

struct Event {
  std::int64_t time_ps;
  Channel channel;

  friend bool operator==(const Event&, const Event&) = default;
};

// Simulated TDC input: detection records ordered by time (ties broken by
// channel), all within [0, duration]. With dead time enabled, two events on
// the same channel are never closer than that channel's dead time.
struct EventStream {
  std::vector<Event> events;
  double duration_s = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t config_digest = 0;

  std::int64_t singles(Channel c) const {
    std::int64_t n = 0;
    for (const Event& e : events) n += (e.channel == c) ? 1 : 0;
    return n;
  }
};

// One point of a HOM delay scan (control in ps) or a Franson phase scan
// (control in radians).
struct ScanPoint {
  double control = 0.0;
  std::int64_t coincidences = 0;
  std::int64_t singles_a = 0;
  std::int64_t singles_b = 0;
};

}  // namespace pairkit
