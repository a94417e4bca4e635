#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tti/bo.hpp"
#include "tti/orchestrator.hpp"

namespace tti {

// Cross-product sweep axes; an axis that is present must be nonempty. Attack
// entries may be bare kind names or objects overriding per-kind knobs.
struct SweepSpec {
    std::optional<std::vector<AttackSpec>> attacks;
    std::optional<std::vector<DefenseMode>> defenses;
    std::optional<std::vector<int>> malicious_counts;
    std::optional<std::vector<TierSpec>> tierings;
};

struct ExperimentManifest {
    int schema_version = 1;
    std::string run_label;
    std::string output_dir;
    ScenarioConfig scenario;
    std::optional<BOConfig> bo;
    std::optional<SweepSpec> sweep;
};

struct CliOverrides {
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
};

// Strict parse: unknown keys, wrong types, and invalid values all throw
// ConfigError naming the offending field.
ExperimentManifest load_manifest(const std::string& path);
ExperimentManifest parse_manifest_text(const std::string& text);

// Serialization helpers (canonical form: sorted keys, floats at 6 decimals).
std::string canonical_reserialize(const std::string& json_text);
std::string metrics_csv_text(const std::vector<RoundRecord>& records);

// Environment variable consulted for the output directory when no --output-dir
// flag is given; the manifest value is the final fallback.
inline constexpr const char* kOutputDirEnvVar = "TTI_OUTPUT_DIR";

// Exit codes: 0 success, 2 invalid manifest/configuration, 1 runtime failure.
int cmd_run(const std::string& manifest_path, const CliOverrides& overrides = {});
int cmd_calibrate(const std::string& manifest_path, const CliOverrides& overrides = {});
int cmd_sweep(const std::string& manifest_path, const CliOverrides& overrides = {});

}  // namespace tti
