#include "tti/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tti/vec_ops.hpp"

namespace tti {

std::vector<double> clip_norm(const std::vector<double>& v, double bound) {
    if (bound <= 0.0) throw ConfigError("clip_norm: bound must be > 0");
    double n = vec::l2_norm(v);
    if (n <= bound) return v;
    std::vector<double> out = v;
    double scale = bound / n;
    for (auto& x : out) x *= scale;
    return out;
}

std::vector<std::uint8_t> neurotoxin_mask(const std::vector<double>& hint, double fraction) {
    if (fraction <= 0.0 || fraction >= 1.0)
        throw ConfigError("neurotoxin: mask_top_fraction must lie in (0,1)");
    const std::size_t s = hint.size();
    auto masked = static_cast<std::size_t>(fraction * static_cast<double>(s));
    std::vector<std::size_t> order(s);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        double fa = std::fabs(hint[a]);
        double fb = std::fabs(hint[b]);
        if (fa != fb) return fa > fb;
        return a < b;
    });
    std::vector<std::uint8_t> mask(s, 0);
    for (std::size_t i = 0; i < masked; ++i) mask[order[i]] = 1;
    return mask;
}

UpdateDelta attack_local_round(const FlatModel& model_prev, const LabeledDataset& poisoned_dataset,
                               const AttackSpec& spec, const TrainConfig& config,
                               const std::vector<double>* benign_direction_hint) {
    if (spec.alpha_mix < 0.0 || spec.alpha_mix > 1.0)
        throw ConfigError("attack: alpha_mix must lie in [0,1]");

    switch (spec.kind) {
        case AttackKind::None: {
            auto [trained, delta] = local_train(model_prev, poisoned_dataset, config, LossSpec{});
            return delta;
        }
        case AttackKind::BoundedScaling: {
            if (spec.scale_factor <= 1.0)
                throw ConfigError("bounded_scaling: scale_factor must be > 1");
            if (spec.norm_bound <= 0.0)
                throw ConfigError("bounded_scaling: norm_bound must be resolved to > 0");
            auto [trained, delta] = local_train(model_prev, poisoned_dataset, config, LossSpec{});
            for (auto& x : delta.delta) x *= spec.scale_factor;
            delta.delta = clip_norm(delta.delta, spec.norm_bound);
            return delta;
        }
        case AttackKind::EuclideanConstrained: {
            LossSpec loss{LossKind::EuclideanAugmented, spec.alpha_mix, &model_prev.params};
            auto [trained, delta] = local_train(model_prev, poisoned_dataset, config, loss);
            return delta;
        }
        case AttackKind::CosineConstrained: {
            // Alignment target: the benign update direction the attacker can
            // observe (previous global update when available, otherwise the
            // broadcast model itself).
            const std::vector<double>* anchor =
                benign_direction_hint != nullptr ? benign_direction_hint : &model_prev.params;
            if (anchor->size() != model_prev.size())
                throw ShapeError("cosine_constrained: hint length does not match parameter count");
            LossSpec loss{LossKind::CosineAugmented, spec.alpha_mix, anchor};
            loss.anchor_is_direction = true;
            loss.update_base = &model_prev.params;
            auto [trained, delta] = local_train(model_prev, poisoned_dataset, config, loss);
            return delta;
        }
        case AttackKind::Neurotoxin: {
            if (benign_direction_hint == nullptr)
                throw ConfigError("neurotoxin: benign direction hint is required");
            if (benign_direction_hint->size() != model_prev.size())
                throw ShapeError("neurotoxin: hint length does not match parameter count");
            auto mask = neurotoxin_mask(*benign_direction_hint, spec.mask_top_fraction);
            auto [trained, delta] = local_train(model_prev, poisoned_dataset, config, LossSpec{}, &mask);
            return delta;
        }
    }
    throw InternalError("attack_local_round: unknown attack kind");
}

AttackKind attack_kind_from_string(const std::string& name) {
    if (name == "none") return AttackKind::None;
    if (name == "bounded_scaling") return AttackKind::BoundedScaling;
    if (name == "euclidean_constrained") return AttackKind::EuclideanConstrained;
    if (name == "cosine_constrained") return AttackKind::CosineConstrained;
    if (name == "neurotoxin") return AttackKind::Neurotoxin;
    throw ConfigError("unknown attack kind: " + name);
}

std::string to_string(AttackKind kind) {
    switch (kind) {
        case AttackKind::None: return "none";
        case AttackKind::BoundedScaling: return "bounded_scaling";
        case AttackKind::EuclideanConstrained: return "euclidean_constrained";
        case AttackKind::CosineConstrained: return "cosine_constrained";
        case AttackKind::Neurotoxin: return "neurotoxin";
    }
    return "unknown";
}

}  // namespace tti
