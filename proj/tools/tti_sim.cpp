// Command-line front end for the federated backdoor-defense simulator.
//
//   tti_sim run        <manifest.json> [--output-dir D] [--seed N]
//   tti_sim calibrate  <manifest.json> [--output-dir D] [--seed N]
//   tti_sim sweep      <manifest.json> [--output-dir D] [--seed N]

#include <string>

#include <CLI11.hpp>

#include "tti/experiment_io.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Deterministic over-the-air federated learning simulator with "
                 "trust-then-inspect robust aggregation"};
    app.require_subcommand(1);

    std::string manifest_path;
    std::string output_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("manifest", manifest_path, "Path to the experiment manifest (JSON)")
            ->required();
        sub->add_option("--output-dir", output_dir,
                        "Override the manifest output directory (also honors $TTI_OUTPUT_DIR)");
        sub->add_option("--seed", seed, "Override the scenario seed")
            ->each([&](const std::string&) { seed_set = true; });
    };

    auto* run = app.add_subcommand("run", "Run one experiment and write metrics.csv/summary.json");
    auto* calibrate =
        app.add_subcommand("calibrate", "Search trust-score weights, write calibration.json");
    auto* sweep = app.add_subcommand("sweep", "Run a manifest-declared grid of experiments");
    add_common(run);
    add_common(calibrate);
    add_common(sweep);

    CLI11_PARSE(app, argc, argv);

    tti::CliOverrides overrides;
    if (!output_dir.empty()) overrides.output_dir = output_dir;
    if (seed_set) overrides.seed = seed;

    if (run->parsed()) return tti::cmd_run(manifest_path, overrides);
    if (calibrate->parsed()) return tti::cmd_calibrate(manifest_path, overrides);
    return tti::cmd_sweep(manifest_path, overrides);
}
