#pragma once

#include <cstdint>
#include <string>

namespace pairkit::cli {

// Exit codes shared by every subcommand. Nothing else is ever returned.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitResourceError = 3;
inline constexpr int kExitFitError = 4;

inline constexpr std::uint64_t kDefaultSeed = 1566;

struct SimulatePairsOptions {
  std::string config_path;  // empty = documented defaults
  std::uint64_t seed = kDefaultSeed;
  std::string events_path = "events.csv";
  std::string histogram_path = "histogram.csv";
};

struct HomOptions {
  std::string config_path;
  std::uint64_t seed = kDefaultSeed;
  std::string delay_spec = "-3:3:0.2";  // start:stop:step, ps
  std::int64_t pairs_per_point = 1000000;
  double intrinsic_visibility = 1.0;
  std::string out_path = "scan.csv";
  bool fit = false;
};

struct FransonOptions {
  std::string config_path;
  std::uint64_t seed = kDefaultSeed;
  std::string phase_spec = "0:2.9:0.2618";  // start:stop:step, radians
  std::int64_t pairs_per_point = 200000;
  double intrinsic_visibility = 0.956;
  double path_imbalance_ps = 2500.0;
  std::string out_path = "fringe.csv";
  bool fit = false;
};

int cmd_simulate_pairs(const SimulatePairsOptions& options);
int cmd_hom(const HomOptions& options);
int cmd_franson(const FransonOptions& options);
int cmd_report(const std::string& run_directory);

}  // namespace pairkit::cli
