#include "tti/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tti/rng.hpp"

namespace tti {

LabeledDataset generate_dataset(int classes, int dim, int per_class_count, double cluster_spread,
                                std::uint64_t seed) {
    if (classes < 2) throw ConfigError("generate_dataset: need at least 2 classes");
    if (dim < classes)
        throw ConfigError("generate_dataset: feature dim must be >= class count");
    if (per_class_count < 1) throw ConfigError("generate_dataset: per_class_count must be >= 1");
    if (cluster_spread < 0.0) throw ConfigError("generate_dataset: cluster_spread must be >= 0");

    LabeledDataset ds;
    ds.num_classes = classes;
    ds.feature_dim = dim;
    ds.features.reserve(static_cast<std::size_t>(classes) * per_class_count);
    ds.labels.reserve(ds.features.capacity());

    Rng rng(seed);
    for (int c = 0; c < classes; ++c) {
        for (int i = 0; i < per_class_count; ++i) {
            std::vector<double> x(static_cast<std::size_t>(dim), 0.0);
            x[static_cast<std::size_t>(c)] = 1.0;
            if (cluster_spread > 0.0) {
                for (auto& v : x) v += cluster_spread * rng.normal();
            }
            ds.features.push_back(std::move(x));
            ds.labels.push_back(c);
        }
    }
    return ds;
}

std::vector<LabeledDataset> dirichlet_partition(const LabeledDataset& dataset,
                                                const PartitionSpec& spec) {
    if (dataset.empty()) throw ConfigError("dirichlet_partition: empty dataset");
    if (spec.num_clients < 2) throw ConfigError("dirichlet_partition: need at least 2 clients");
    if (spec.dirichlet_alpha <= 0.0)
        throw ConfigError("dirichlet_partition: dirichlet_alpha must be > 0");
    if (static_cast<std::size_t>(spec.num_clients) > dataset.size())
        throw ConfigError("dirichlet_partition: more clients than samples");

    const int K = spec.num_clients;
    Rng rng(spec.seed);

    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(dataset.num_classes));
    for (std::size_t i = 0; i < dataset.size(); ++i)
        by_class[static_cast<std::size_t>(dataset.labels[i])].push_back(static_cast<int>(i));

    std::vector<std::vector<int>> assigned(static_cast<std::size_t>(K));
    for (auto& idx : by_class) {
        if (idx.empty()) continue;
        rng.shuffle(idx);
        auto shares = rng.dirichlet(static_cast<std::size_t>(K), spec.dirichlet_alpha);

        // Largest-remainder rounding so the per-class counts sum exactly.
        std::size_t n = idx.size();
        std::vector<std::size_t> counts(static_cast<std::size_t>(K), 0);
        std::vector<std::pair<double, int>> remainders;
        std::size_t assigned_count = 0;
        for (int k = 0; k < K; ++k) {
            double exact = shares[static_cast<std::size_t>(k)] * static_cast<double>(n);
            counts[static_cast<std::size_t>(k)] = static_cast<std::size_t>(exact);
            assigned_count += counts[static_cast<std::size_t>(k)];
            remainders.push_back({exact - std::floor(exact), k});
        }
        std::sort(remainders.begin(), remainders.end(),
                  [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                  });
        for (std::size_t r = 0; assigned_count < n; ++r, ++assigned_count)
            counts[static_cast<std::size_t>(remainders[r % remainders.size()].second)]++;

        std::size_t cursor = 0;
        for (int k = 0; k < K; ++k) {
            for (std::size_t j = 0; j < counts[static_cast<std::size_t>(k)]; ++j)
                assigned[static_cast<std::size_t>(k)].push_back(idx[cursor++]);
        }
    }

    // Repair: a client with no samples takes one from the largest client.
    for (int k = 0; k < K; ++k) {
        auto& mine = assigned[static_cast<std::size_t>(k)];
        while (mine.empty()) {
            int largest = -1;
            std::size_t best = 1;  // donor must keep at least one sample
            for (int j = 0; j < K; ++j) {
                if (assigned[static_cast<std::size_t>(j)].size() > best) {
                    best = assigned[static_cast<std::size_t>(j)].size();
                    largest = j;
                }
            }
            if (largest < 0) throw InternalError("dirichlet_partition: cannot repair empty client");
            mine.push_back(assigned[static_cast<std::size_t>(largest)].back());
            assigned[static_cast<std::size_t>(largest)].pop_back();
        }
    }

    std::vector<LabeledDataset> parts(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        auto& part = parts[static_cast<std::size_t>(k)];
        part.num_classes = dataset.num_classes;
        part.feature_dim = dataset.feature_dim;
        for (int idx : assigned[static_cast<std::size_t>(k)]) {
            part.features.push_back(dataset.features[static_cast<std::size_t>(idx)]);
            part.labels.push_back(dataset.labels[static_cast<std::size_t>(idx)]);
        }
    }
    return parts;
}

void validate_trigger(const TriggerSpec& trigger, int feature_dim, int num_classes) {
    if (trigger.coords.empty()) throw ConfigError("trigger: coords must be nonempty");
    for (int c : trigger.coords) {
        if (c < 0 || c >= feature_dim)
            throw ConfigError("trigger: coordinate outside feature width");
    }
    if (trigger.target_label < 0 || trigger.target_label >= num_classes)
        throw ConfigError("trigger: target_label outside class range");
    if (trigger.poison_rate <= 0.0 || trigger.poison_rate > 1.0)
        throw ConfigError("trigger: poison_rate must lie in (0,1]");
}

LabeledDataset poison_dataset(const LabeledDataset& dataset, const TriggerSpec& trigger,
                              std::uint64_t seed) {
    if (dataset.empty()) throw ConfigError("poison_dataset: empty dataset");
    validate_trigger(trigger, dataset.feature_dim, dataset.num_classes);

    std::size_t n = dataset.size();
    auto m = static_cast<std::size_t>(
        std::ceil(trigger.poison_rate * static_cast<double>(n)));
    m = std::clamp<std::size_t>(m, 1, n);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    LabeledDataset out = dataset;
    for (std::size_t i = 0; i < m; ++i) {
        auto idx = static_cast<std::size_t>(order[i]);
        for (int c : trigger.coords) out.features[idx][static_cast<std::size_t>(c)] += trigger.offset;
        out.labels[idx] = trigger.target_label;
    }
    return out;
}

std::vector<double> apply_trigger_for_eval(const std::vector<double>& features,
                                           const TriggerSpec& trigger) {
    for (int c : trigger.coords) {
        if (c < 0 || c >= static_cast<int>(features.size()))
            throw ConfigError("trigger: coordinate outside feature width");
    }
    std::vector<double> out = features;
    for (int c : trigger.coords) out[static_cast<std::size_t>(c)] += trigger.offset;
    return out;
}

}  // namespace tti
