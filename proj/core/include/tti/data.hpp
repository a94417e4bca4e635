#pragma once

#include <cstdint>
#include <vector>

#include "tti/errors.hpp"

namespace tti {

struct LabeledDataset {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;  // class ids in [0, num_classes)
    int num_classes = 0;
    int feature_dim = 0;

    std::size_t size() const { return features.size(); }
    bool empty() const { return features.empty(); }
};

// Additive trigger on a fixed coordinate subset; poisoned samples are
// relabeled to the target class.
struct TriggerSpec {
    std::vector<int> coords;
    double offset = 0.0;
    int target_label = 0;
    double poison_rate = 0.5;  // fraction of local samples poisoned, in (0, 1]
};

struct PartitionSpec {
    int num_clients = 2;
    double dirichlet_alpha = 0.5;
    std::uint64_t seed = 0;
};

// Gaussian clusters around scaled one-hot class means (mean of class c is the
// unit vector e_c, which requires dim >= classes). Deterministic per seed.
LabeledDataset generate_dataset(int classes, int dim, int per_class_count, double cluster_spread,
                                std::uint64_t seed);

// Per-class client shares drawn from Dirichlet(alpha * 1_K); every sample is
// assigned to exactly one client and no client is left empty (one sample is
// moved from the largest client when needed).
std::vector<LabeledDataset> dirichlet_partition(const LabeledDataset& dataset,
                                                const PartitionSpec& spec);

// Poisons ceil(poison_rate * n) samples (at least one): the trigger offset is
// added at the trigger coordinates and the label is rewritten. All other
// samples are returned untouched.
LabeledDataset poison_dataset(const LabeledDataset& dataset, const TriggerSpec& trigger,
                              std::uint64_t seed);

// Pure feature transform used when measuring attack success.
std::vector<double> apply_trigger_for_eval(const std::vector<double>& features,
                                           const TriggerSpec& trigger);

void validate_trigger(const TriggerSpec& trigger, int feature_dim, int num_classes);

}  // namespace tti
