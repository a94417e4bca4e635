#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tti/data.hpp"
#include "tti/errors.hpp"

namespace tti {

struct Dims {
    int input = 0;
    std::vector<int> hidden;  // may be empty (linear softmax classifier)
    int classes = 0;
};

struct LayerSegment {
    std::string name;
    std::size_t start = 0;
    std::size_t length = 0;
};

// Ordered, contiguous, disjoint segments covering [0, S) exactly.
using LayerMap = std::vector<LayerSegment>;

// A classifier whose parameters live in one flat vector. Each weight matrix
// and each bias vector is its own layer-map segment, which keeps the
// layer-wise defense math independent of the architecture details.
struct FlatModel {
    std::vector<double> params;
    LayerMap layer_map;
    Dims dims;

    std::size_t size() const { return params.size(); }
};

struct UpdateDelta {
    std::vector<double> delta;  // trained params minus broadcast params
    int client_id = -1;
    int round = 0;
};

struct TrainConfig {
    double learning_rate = 0.05;
    int local_epochs = 1;
    int batch_size = 16;
    std::uint64_t seed = 0;
};

enum class LossKind { Normal, EuclideanAugmented, CosineAugmented };

// Loss used for one local-training run. Augmented kinds blend cross entropy
// with a stealth penalty anchored at the broadcast model:
//   (1 - alpha_mix) * CE + alpha_mix * metric(params, anchor)
// For CosineAugmented the penalty is the cosine distance between the full
// parameter vector and the anchor; when anchor_is_direction is set the
// distance is instead measured between the update (params - update_base) and
// the anchor direction.
struct LossSpec {
    LossKind kind = LossKind::Normal;
    double alpha_mix = 0.0;
    const std::vector<double>* anchor = nullptr;  // required when augmented and alpha_mix > 0
    bool anchor_is_direction = false;
    const std::vector<double>* update_base = nullptr;  // required when anchor_is_direction
};

// Deterministic init: uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per layer.
FlatModel init_model(const Dims& dims, std::uint64_t seed);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

// Mean loss and gradient over the batch selected by `indices` (all samples if
// empty). Throws ShapeError on feature-width mismatch.
LossGrad forward_loss_grad(const FlatModel& model, const LabeledDataset& batch,
                           const LossSpec& spec, const std::vector<int>& indices = {});

std::vector<double> predict_logits(const FlatModel& model, const std::vector<double>& features);
int predict_class(const FlatModel& model, const std::vector<double>& features);

// Seeded mini-batch SGD. `zero_grad_coords`, when non-null, marks flat
// coordinates whose gradient is zeroed before every step (the sparse-attack
// hook). Returns the trained model together with its exact delta.
std::pair<FlatModel, UpdateDelta> local_train(const FlatModel& model, const LabeledDataset& dataset,
                                              const TrainConfig& config, const LossSpec& spec,
                                              const std::vector<std::uint8_t>* zero_grad_coords = nullptr);

// Splits a flat delta into per-layer vectors; concatenation reproduces the
// input exactly. Throws ShapeError when the map does not cover the vector.
std::vector<std::vector<double>> slice_layers(const std::vector<double>& delta,
                                              const LayerMap& layer_map);

}  // namespace tti
