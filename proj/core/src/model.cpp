#include "tti/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tti/rng.hpp"
#include "tti/vec_ops.hpp"

namespace tti {

namespace {

void validate_dims(const Dims& dims) {
    if (dims.input < 1) throw ConfigError("model dims: input width must be >= 1");
    if (dims.classes < 2) throw ConfigError("model dims: class count must be >= 2");
    for (int h : dims.hidden) {
        if (h < 1) throw ConfigError("model dims: hidden layer width must be >= 1");
    }
}

// Widths of the dense stack: input, hidden..., classes.
std::vector<int> stack_widths(const Dims& dims) {
    std::vector<int> w;
    w.push_back(dims.input);
    w.insert(w.end(), dims.hidden.begin(), dims.hidden.end());
    w.push_back(dims.classes);
    return w;
}

struct SegmentView {
    const double* w;  // rows x cols, row-major
    const double* b;  // rows
    int rows;
    int cols;
};

std::vector<SegmentView> segment_views(const FlatModel& model) {
    auto widths = stack_widths(model.dims);
    std::vector<SegmentView> views;
    std::size_t seg = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const auto& ws = model.layer_map[seg++];
        const auto& bs = model.layer_map[seg++];
        views.push_back({model.params.data() + ws.start, model.params.data() + bs.start,
                         widths[l + 1], widths[l]});
    }
    return views;
}

double metric_loss_and_grad(const LossSpec& spec, const std::vector<double>& params,
                            std::vector<double>& grad_out) {
    const std::vector<double>& anchor = *spec.anchor;
    if (anchor.size() != params.size())
        throw ShapeError("augmented loss: anchor length does not match parameter count");

    if (spec.kind == LossKind::EuclideanAugmented) {
        double dist = vec::l2_distance(params, anchor);
        if (dist > 0.0) {
            for (std::size_t i = 0; i < params.size(); ++i)
                grad_out[i] = (params[i] - anchor[i]) / dist;
        }
        return dist;
    }

    // CosineAugmented: 1 - <anchor, u> / (|anchor| |u|) where u is the full
    // parameter vector, or the update relative to update_base in direction mode.
    std::vector<double> update;
    const std::vector<double>* u = &params;
    if (spec.anchor_is_direction) {
        if (spec.update_base == nullptr)
            throw ConfigError("augmented loss: direction mode requires update_base");
        if (spec.update_base->size() != params.size())
            throw ShapeError("augmented loss: update_base length mismatch");
        update.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i)
            update[i] = params[i] - (*spec.update_base)[i];
        u = &update;
    }
    double na = vec::l2_norm(anchor);
    double nu = vec::l2_norm(*u);
    if (na == 0.0 || nu == 0.0) return 0.0;
    double ip = vec::dot(anchor, *u);
    double cosv = ip / (na * nu);
    for (std::size_t i = 0; i < params.size(); ++i)
        grad_out[i] = -(anchor[i] / (na * nu) - cosv * (*u)[i] / (nu * nu));
    return 1.0 - cosv;
}

}  // namespace

FlatModel init_model(const Dims& dims, std::uint64_t seed) {
    validate_dims(dims);
    auto widths = stack_widths(dims);

    FlatModel model;
    model.dims = dims;
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        std::size_t wlen = static_cast<std::size_t>(widths[l]) * widths[l + 1];
        std::size_t blen = static_cast<std::size_t>(widths[l + 1]);
        model.layer_map.push_back({"dense" + std::to_string(l) + ".weight", offset, wlen});
        offset += wlen;
        model.layer_map.push_back({"dense" + std::to_string(l) + ".bias", offset, blen});
        offset += blen;
    }
    model.params.assign(offset, 0.0);

    Rng rng(seed);
    std::size_t seg = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
        for (int s = 0; s < 2; ++s, ++seg) {
            const auto& segment = model.layer_map[seg];
            for (std::size_t i = 0; i < segment.length; ++i)
                model.params[segment.start + i] = (2.0 * rng.uniform() - 1.0) * bound;
        }
    }
    return model;
}

LossGrad forward_loss_grad(const FlatModel& model, const LabeledDataset& batch,
                           const LossSpec& spec, const std::vector<int>& indices) {
    if (batch.empty()) throw ConfigError("forward_loss_grad: empty batch");
    if (batch.feature_dim != model.dims.input)
        throw ShapeError("forward_loss_grad: batch feature width does not match model input");
    bool augmented = spec.kind != LossKind::Normal && spec.alpha_mix > 0.0;
    if (augmented && spec.anchor == nullptr)
        throw ConfigError("forward_loss_grad: augmented loss requires an anchor model");
    if (spec.alpha_mix < 0.0 || spec.alpha_mix > 1.0)
        throw ConfigError("forward_loss_grad: alpha_mix must lie in [0,1]");

    auto views = segment_views(model);
    const std::size_t n_layers = views.size();

    LossGrad out;
    out.grad.assign(model.size(), 0.0);

    std::vector<std::vector<double>> acts(n_layers + 1);  // activations, acts[0] = input
    std::vector<std::vector<double>> deltas(n_layers);    // backprop errors per layer

    std::size_t count = indices.empty() ? batch.size() : indices.size();
    double ce_sum = 0.0;

    for (std::size_t bi = 0; bi < count; ++bi) {
        std::size_t si = indices.empty() ? bi : static_cast<std::size_t>(indices[bi]);
        const auto& x = batch.features[si];
        int y = batch.labels[si];

        acts[0] = x;
        for (std::size_t l = 0; l < n_layers; ++l) {
            const auto& v = views[l];
            auto& z = acts[l + 1];
            z.assign(static_cast<std::size_t>(v.rows), 0.0);
            for (int r = 0; r < v.rows; ++r) {
                const double* wr = v.w + static_cast<std::size_t>(r) * v.cols;
                double acc = v.b[r];
                for (int c = 0; c < v.cols; ++c) acc += wr[c] * acts[l][static_cast<std::size_t>(c)];
                z[static_cast<std::size_t>(r)] = (l + 1 < n_layers) ? std::tanh(acc) : acc;
            }
        }

        // Softmax cross entropy on the logits.
        auto& logits = acts[n_layers];
        double zmax = *std::max_element(logits.begin(), logits.end());
        double zsum = 0.0;
        for (double z : logits) zsum += std::exp(z - zmax);
        double log_zsum = std::log(zsum) + zmax;
        ce_sum += log_zsum - logits[static_cast<std::size_t>(y)];

        auto& dlast = deltas[n_layers - 1];
        dlast.resize(logits.size());
        for (std::size_t k = 0; k < logits.size(); ++k) {
            double p = std::exp(logits[k] - log_zsum);
            dlast[k] = p - (static_cast<int>(k) == y ? 1.0 : 0.0);
        }

        for (std::size_t l = n_layers; l-- > 0;) {
            const auto& v = views[l];
            const auto& d = deltas[l];
            // Accumulate weight/bias gradients for this segment pair.
            const auto& wseg = model.layer_map[2 * l];
            const auto& bseg = model.layer_map[2 * l + 1];
            for (int r = 0; r < v.rows; ++r) {
                double dr = d[static_cast<std::size_t>(r)];
                double* gw = out.grad.data() + wseg.start + static_cast<std::size_t>(r) * v.cols;
                for (int c = 0; c < v.cols; ++c) gw[c] += dr * acts[l][static_cast<std::size_t>(c)];
                out.grad[bseg.start + static_cast<std::size_t>(r)] += dr;
            }
            if (l == 0) break;
            auto& dprev = deltas[l - 1];
            dprev.assign(static_cast<std::size_t>(v.cols), 0.0);
            for (int r = 0; r < v.rows; ++r) {
                double dr = d[static_cast<std::size_t>(r)];
                const double* wr = v.w + static_cast<std::size_t>(r) * v.cols;
                for (int c = 0; c < v.cols; ++c) dprev[static_cast<std::size_t>(c)] += wr[c] * dr;
            }
            // tanh'(z) = 1 - tanh(z)^2, and acts already stores tanh(z).
            for (std::size_t c = 0; c < dprev.size(); ++c) {
                double a = acts[l][c];
                dprev[c] *= (1.0 - a * a);
            }
        }
    }

    double inv = 1.0 / static_cast<double>(count);
    for (auto& g : out.grad) g *= inv;
    out.loss = ce_sum * inv;

    if (augmented) {
        std::vector<double> mgrad(model.size(), 0.0);
        double mloss = metric_loss_and_grad(spec, model.params, mgrad);
        double a = spec.alpha_mix;
        out.loss = (1.0 - a) * out.loss + a * mloss;
        for (std::size_t i = 0; i < out.grad.size(); ++i)
            out.grad[i] = (1.0 - a) * out.grad[i] + a * mgrad[i];
    }
    return out;
}

std::vector<double> predict_logits(const FlatModel& model, const std::vector<double>& features) {
    if (static_cast<int>(features.size()) != model.dims.input)
        throw ShapeError("predict: feature width does not match model input");
    auto views = segment_views(model);
    std::vector<double> a = features;
    std::vector<double> z;
    for (std::size_t l = 0; l < views.size(); ++l) {
        const auto& v = views[l];
        z.assign(static_cast<std::size_t>(v.rows), 0.0);
        for (int r = 0; r < v.rows; ++r) {
            const double* wr = v.w + static_cast<std::size_t>(r) * v.cols;
            double acc = v.b[r];
            for (int c = 0; c < v.cols; ++c) acc += wr[c] * a[static_cast<std::size_t>(c)];
            z[static_cast<std::size_t>(r)] = (l + 1 < views.size()) ? std::tanh(acc) : acc;
        }
        a.swap(z);
    }
    return a;
}

int predict_class(const FlatModel& model, const std::vector<double>& features) {
    auto logits = predict_logits(model, features);
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

std::pair<FlatModel, UpdateDelta> local_train(const FlatModel& model, const LabeledDataset& dataset,
                                              const TrainConfig& config, const LossSpec& spec,
                                              const std::vector<std::uint8_t>* zero_grad_coords) {
    if (dataset.empty()) throw ConfigError("local_train: empty dataset");
    if (config.learning_rate <= 0.0) throw ConfigError("local_train: learning_rate must be > 0");
    if (config.batch_size < 1) throw ConfigError("local_train: batch_size must be >= 1");
    if (config.local_epochs < 0) throw ConfigError("local_train: local_epochs must be >= 0");
    if (zero_grad_coords != nullptr && zero_grad_coords->size() != model.size())
        throw ShapeError("local_train: gradient mask length does not match parameter count");

    FlatModel trained = model;
    Rng rng(config.seed);
    std::vector<int> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.local_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(config.batch_size)) {
            std::size_t end = std::min(order.size(), pos + static_cast<std::size_t>(config.batch_size));
            std::vector<int> batch(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
            auto lg = forward_loss_grad(trained, dataset, spec, batch);
            if (zero_grad_coords != nullptr) {
                for (std::size_t i = 0; i < lg.grad.size(); ++i)
                    if ((*zero_grad_coords)[i]) lg.grad[i] = 0.0;
            }
            for (std::size_t i = 0; i < trained.params.size(); ++i)
                trained.params[i] -= config.learning_rate * lg.grad[i];
        }
        for (double p : trained.params) {
            if (!std::isfinite(p)) throw NumericalError("local_train: non-finite parameter after step");
        }
    }

    UpdateDelta delta;
    delta.delta.resize(model.size());
    for (std::size_t i = 0; i < model.size(); ++i)
        delta.delta[i] = trained.params[i] - model.params[i];
    return {std::move(trained), std::move(delta)};
}

std::vector<std::vector<double>> slice_layers(const std::vector<double>& delta,
                                              const LayerMap& layer_map) {
    std::size_t total = 0;
    for (const auto& seg : layer_map) {
        if (seg.start != total) throw ShapeError("slice_layers: layer map is not contiguous");
        total += seg.length;
    }
    if (total != delta.size())
        throw ShapeError("slice_layers: layer map does not cover the delta exactly");

    std::vector<std::vector<double>> slices;
    slices.reserve(layer_map.size());
    for (const auto& seg : layer_map)
        slices.emplace_back(delta.begin() + static_cast<std::ptrdiff_t>(seg.start),
                            delta.begin() + static_cast<std::ptrdiff_t>(seg.start + seg.length));
    return slices;
}

}  // namespace tti
