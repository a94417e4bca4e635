#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "tti/attacks.hpp"
#include "tti/data.hpp"
#include "tti/model.hpp"
#include "tti/reputation.hpp"
#include "tti/trust.hpp"

namespace tti {

enum class DefenseMode {
    None,           // plain mean over everyone
    Tti,            // full two-stage pipeline
    TdaOnly,        // Stage I score = normalized direction alignment only
    L2Only,         // Stage I score = normalized relative norm only
    SpikinessOnly,  // Stage I score = normalized spikiness only
    ModelWise,      // Stage II treats the whole update as a single layer
    Bev,            // weighted mean with tier weights 1 / 0.1 / 0, no inspection
};

DefenseMode defense_mode_from_string(const std::string& name);
std::string to_string(DefenseMode mode);
std::string to_string(Tier tier);

struct DataConfig {
    int classes = 10;
    int feature_dim = 32;
    int train_per_class = 150;
    int test_per_class = 50;
    double cluster_spread = 0.25;
    double dirichlet_alpha = 0.5;
};

struct ScenarioConfig {
    int num_clients = 20;
    int malicious_count = 6;
    std::vector<int> malicious_ids;  // explicit override; derived from the seed when empty
    AttackSpec attack;
    TierSpec tiering;
    TransformParams transforms;
    std::vector<double> trust_weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    double rho = 0.6;
    int rounds = 60;
    int warmup_rounds = 10;
    double ota_noise_std = 0.0;
    DefenseMode defense = DefenseMode::Tti;
    std::uint64_t seed = 1;
    DataConfig data;
    std::vector<int> hidden_layers = {64, 32};
    TrainConfig train = {0.12, 2, 16, 0};
    TriggerSpec trigger = {{0, 26, 27, 28, 29, 30, 31}, 0.45, 0, 0.95};
    int rs_only_after_round = 0;  // 0 disables the pure reputation-gate shortcut
};

void validate_scenario(const ScenarioConfig& config);

struct RoundRecord {
    int round = 0;
    double mta = 0.0;
    double asr = 0.0;
    std::vector<Tier> tiers;                        // Stage-I tier per client
    std::vector<std::pair<int, bool>> verdicts;     // (suspect id, inspection accepted)
    std::vector<int> final_participants;
    std::vector<std::int64_t> rs_snapshot;
    int n_rs_filtered = 0;
    bool stalled = false;

    int tier_count(Tier t) const;
    int accepted_suspect_count() const;
};

// Holds the trusted tier's updates once tiering has decided them. The server
// side only ever sees the aggregate: every read of an individual update goes
// through raw_deltas(), which trips a process-wide counter so tests can prove
// the aggregate-only contract holds on every scenario they run.
class TrustedUploads {
public:
    explicit TrustedUploads(std::vector<std::vector<double>> deltas);

    std::size_t count() const { return deltas_.size(); }
    std::size_t dim() const { return deltas_.empty() ? 0 : deltas_.front().size(); }

    // Mean of the uploads plus optional per-coordinate Gaussian channel noise.
    std::vector<double> aggregate(double noise_std, std::uint64_t seed) const;

    const std::vector<std::vector<double>>& raw_deltas() const;

    static std::int64_t tripwire_count() { return tripwire_.load(); }
    static void reset_tripwire() { tripwire_.store(0); }

private:
    std::vector<std::vector<double>> deltas_;
    static std::atomic<std::int64_t> tripwire_;
};

// Mean of the given updates plus i.i.d. zero-mean Gaussian noise of the given
// std per coordinate (when noise_std > 0). Throws AggregationError when empty.
std::vector<double> ota_aggregate(const std::vector<std::vector<double>>& deltas,
                                  double noise_std, std::uint64_t seed);

struct EvalResult {
    double mta = 0.0;
    double asr = 0.0;
};

// Clean accuracy plus the fraction of triggered non-target-class test inputs
// classified as the trigger target.
EvalResult evaluate(const FlatModel& model, const LabeledDataset& clean_test,
                    const TriggerSpec& trigger);

struct ExperimentResult {
    std::vector<RoundRecord> records;
    FlatModel final_model;
    int anomaly_count = 0;  // rounds that needed the empty-trusted-tier fallback
};

// One federated scenario: fixed datasets, persistent model and ledger, one
// step() per communication round.
class Simulation {
public:
    explicit Simulation(const ScenarioConfig& config);

    RoundRecord step();
    ExperimentResult run();

    const FlatModel& model() const { return model_; }
    const ReputationLedger& ledger() const { return ledger_; }
    const std::vector<int>& malicious_ids() const { return malicious_ids_; }
    int anomaly_count() const { return anomaly_count_; }

    // Test instrumentation: the per-client updates of the most recent round.
    // Simulator state only; defense code never reads trusted updates from here.
    const std::vector<UpdateDelta>& debug_last_deltas() const { return last_deltas_; }

private:
    std::vector<UpdateDelta> train_all_clients();
    std::vector<double> stage_one_scores(const std::vector<UpdateDelta>& deltas) const;

    ScenarioConfig config_;
    FlatModel model_;
    LabeledDataset clean_test_;
    std::vector<LabeledDataset> client_data_;  // poisoned for malicious clients
    std::vector<bool> is_malicious_;
    std::vector<int> malicious_ids_;
    ReputationLedger ledger_;
    std::vector<double> prev_global_update_;   // w^{t-1} - w^{t-2}; ones before round 2
    std::vector<double> prev_benign_norms_;
    std::vector<UpdateDelta> last_deltas_;
    int round_ = 0;
    int anomaly_count_ = 0;
};

ExperimentResult run_experiment(const ScenarioConfig& config);

// Calibration objective: final clean accuracy minus lambda times the final
// attack success rate of a full run with the given trust weights.
double scenario_objective(const std::vector<double>& beta, const ScenarioConfig& scenario,
                          double lambda);

}  // namespace tti
