#pragma once

#include <string>
#include <vector>

#include "tti/errors.hpp"
#include "tti/model.hpp"

namespace tti {

enum class AttackKind {
    None,
    BoundedScaling,        // amplify the update, then clip its norm into a benign-looking range
    EuclideanConstrained,  // train against CE blended with ||w - w_prev||
    CosineConstrained,     // train against CE blended with the model-to-model cosine distance
    Neurotoxin,            // confine gradients to coordinates rarely used by benign training
};

struct AttackSpec {
    AttackKind kind = AttackKind::None;
    double alpha_mix = 0.5;          // stealth/effectiveness trade-off for constrained kinds
    double scale_factor = 5.0;       // bounded scaling, > 1
    double norm_bound = 0.0;         // absolute clip bound; resolved by the caller when 0
    double norm_bound_factor = 1.5;  // relative default: x median benign norm of previous round
    double mask_top_fraction = 0.95; // neurotoxin: zero gradients on this top fraction of |hint|
};

// Rescales v so that ||v'|| = min(||v||, bound) with direction preserved.
std::vector<double> clip_norm(const std::vector<double>& v, double bound);

// Zero-gradient mask for the sparse attack: marks the top `fraction` of
// coordinates ranked by |hint| (ties toward lower index).
std::vector<std::uint8_t> neurotoxin_mask(const std::vector<double>& hint, double fraction);

// One malicious local round. The dataset is expected to be trigger-poisoned
// already; `benign_direction_hint` is required only for Neurotoxin.
UpdateDelta attack_local_round(const FlatModel& model_prev, const LabeledDataset& poisoned_dataset,
                               const AttackSpec& spec, const TrainConfig& config,
                               const std::vector<double>* benign_direction_hint = nullptr);

AttackKind attack_kind_from_string(const std::string& name);
std::string to_string(AttackKind kind);

}  // namespace tti
