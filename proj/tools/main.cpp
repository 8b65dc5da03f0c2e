#include <CLI11.hpp>

#include "commands.hpp"
#include "pairkit/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"pairkit: photon-pair experiment simulation and analysis"};
  app.set_version_flag("--version", pairkit::kVersion);
  app.require_subcommand(1);

  pairkit::cli::SimulatePairsOptions pairs;
  CLI::App* sim = app.add_subcommand(
      "simulate-pairs", "Simulate a TE/TM pair stream and its coincidence histogram");
  sim->add_option("config", pairs.config_path, "Config file (defaults when omitted)");
  sim->add_option("--seed", pairs.seed, "RNG seed");
  sim->add_option("--out", pairs.events_path, "Event CSV path");
  sim->add_option("--hist", pairs.histogram_path, "Histogram CSV path");

  pairkit::cli::HomOptions hom;
  CLI::App* hom_cmd = app.add_subcommand("hom", "Scan the two-photon interference dip");
  hom_cmd->add_option("config", hom.config_path, "Config file (defaults when omitted)");
  hom_cmd->add_option("--seed", hom.seed, "RNG seed");
  hom_cmd->add_option("--delays", hom.delay_spec, "Delay scan start:stop:step in ps");
  hom_cmd->add_option("--pairs", hom.pairs_per_point, "Emitted pairs per scan point");
  hom_cmd->add_option("--visibility", hom.intrinsic_visibility,
                      "Intrinsic two-photon visibility (facets excluded)");
  hom_cmd->add_option("--out", hom.out_path, "Scan CSV path");
  hom_cmd->add_flag("--fit", hom.fit, "Fit the dip and report raw/net visibility");

  pairkit::cli::FransonOptions franson;
  CLI::App* franson_cmd =
      app.add_subcommand("franson", "Scan the Franson fringe and test the Bell bound");
  franson_cmd->add_option("config", franson.config_path, "Config file (defaults when omitted)");
  franson_cmd->add_option("--seed", franson.seed, "RNG seed");
  franson_cmd->add_option("--phases", franson.phase_spec, "Phase scan start:stop:step in rad");
  franson_cmd->add_option("--pairs", franson.pairs_per_point, "Emitted pairs per phase");
  franson_cmd->add_option("--visibility", franson.intrinsic_visibility,
                          "Intrinsic entanglement visibility");
  franson_cmd->add_option("--imbalance", franson.path_imbalance_ps,
                          "Interferometer path imbalance in ps");
  franson_cmd->add_option("--out", franson.out_path, "Fringe CSV path");
  franson_cmd->add_flag("--fit", franson.fit, "Fit the fringe and report the Bell parameter");

  std::string report_dir = ".";
  CLI::App* report_cmd =
      app.add_subcommand("report", "Summarize manifests written by prior commands");
  report_cmd->add_option("directory", report_dir, "Run directory with manifests");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return pairkit::cli::kExitConfigError;
  }

  if (sim->parsed()) return pairkit::cli::cmd_simulate_pairs(pairs);
  if (hom_cmd->parsed()) return pairkit::cli::cmd_hom(hom);
  if (franson_cmd->parsed()) return pairkit::cli::cmd_franson(franson);
  if (report_cmd->parsed()) return pairkit::cli::cmd_report(report_dir);
  return pairkit::cli::kExitConfigError;
}
