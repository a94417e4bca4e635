#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "tti/data.hpp"
#include "tti/model.hpp"
#include "tti/rng.hpp"

using namespace tti;

namespace {

double mean_client_label_entropy(const std::vector<LabeledDataset>& parts, int classes) {
    double total = 0.0;
    for (const auto& p : parts) {
        std::vector<double> hist(static_cast<std::size_t>(classes), 0.0);
        for (int y : p.labels) hist[static_cast<std::size_t>(y)] += 1.0;
        double h = 0.0;
        for (double c : hist) {
            if (c == 0.0) continue;
            double q = c / static_cast<double>(p.labels.size());
            h -= q * std::log(q);
        }
        total += h;
    }
    return total / static_cast<double>(parts.size());
}

}  // namespace

TEST_CASE("generate_dataset counts and determinism") {
    auto ds = generate_dataset(10, 16, 100, 0.3, 1);
    CHECK(ds.size() == 1000);
    std::map<int, int> per_class;
    for (int y : ds.labels) per_class[y]++;
    for (int c = 0; c < 10; ++c) CHECK(per_class[c] == 100);

    auto again = generate_dataset(10, 16, 100, 0.3, 1);
    CHECK(ds.features == again.features);

    CHECK_THROWS_AS(generate_dataset(10, 8, 5, 0.3, 1), ConfigError);  // dim < classes
}

TEST_CASE("zero spread collapses each class onto its mean") {
    auto ds = generate_dataset(4, 6, 5, 0.0, 9);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (int j = 0; j < ds.feature_dim; ++j) {
            double expected = (j == ds.labels[i]) ? 1.0 : 0.0;
            CHECK(ds.features[i][static_cast<std::size_t>(j)] == expected);
        }
    }
}

TEST_CASE("a fresh linear probe separates the synthetic task") {
    auto train = generate_dataset(4, 8, 80, 0.2, 12);
    auto test = generate_dataset(4, 8, 40, 0.2, 13);
    auto probe = init_model(Dims{8, {}, 4}, 3);
    for (int epoch = 0; epoch < 10; ++epoch) {
        TrainConfig cfg{0.2, 1, 16, derive_seed(55, static_cast<std::uint64_t>(epoch))};
        probe = local_train(probe, train, cfg, LossSpec{}).first;
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i)
        if (predict_class(probe, test.features[i]) == test.labels[i]) ++correct;
    CHECK(static_cast<double>(correct) / static_cast<double>(test.size()) >= 0.95);
}

TEST_CASE("dirichlet_partition is an exhaustive disjoint partition") {
    auto ds = generate_dataset(10, 12, 50, 0.3, 21);
    auto parts = dirichlet_partition(ds, {20, 0.5, 7});
    REQUIRE(parts.size() == 20);

    std::size_t total = 0;
    std::multiset<std::vector<double>> original(ds.features.begin(), ds.features.end());
    std::multiset<std::vector<double>> assigned;
    for (const auto& p : parts) {
        CHECK(!p.empty());
        total += p.size();
        assigned.insert(p.features.begin(), p.features.end());
    }
    CHECK(total == ds.size());
    CHECK(original == assigned);
}

TEST_CASE("huge alpha approaches a uniform split") {
    auto ds = generate_dataset(4, 8, 200, 0.2, 31);
    const int k = 8;
    auto parts = dirichlet_partition(ds, {k, 1e6, 3});
    double expected = static_cast<double>(ds.size()) / k;
    for (const auto& p : parts) {
        CHECK(static_cast<double>(p.size()) >= 0.9 * expected);
        CHECK(static_cast<double>(p.size()) <= 1.1 * expected);
    }
}

TEST_CASE("dirichlet shares sum to one") {
    Rng rng(17);
    for (int i = 0; i < 50; ++i) {
        auto shares = rng.dirichlet(20, 0.5);
        double sum = 0.0;
        for (double s : shares) {
            CHECK(s >= 0.0);
            sum += s;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("label skew is monotone in the concentration parameter") {
    // Statistical check over 20 seed pairs: small alpha must give strictly
    // lower mean per-client label entropy than large alpha.
    auto ds = generate_dataset(10, 12, 60, 0.3, 41);
    double h_small = 0.0, h_large = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        h_small += mean_client_label_entropy(dirichlet_partition(ds, {20, 0.05, seed}), 10);
        h_large += mean_client_label_entropy(dirichlet_partition(ds, {20, 100.0, seed}), 10);
    }
    CHECK(h_small / 20.0 < h_large / 20.0);
}

TEST_CASE("poison_dataset touches exactly the ceiling count") {
    auto ds = generate_dataset(5, 8, 20, 0.2, 51);  // 100 samples
    TriggerSpec trigger{{1, 3}, 0.7, 2, 0.31};

    auto poisoned = poison_dataset(ds, trigger, 5);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        bool feature_changed = ds.features[i] != poisoned.features[i];
        bool label_changed = ds.labels[i] != poisoned.labels[i];
        if (feature_changed) {
            CHECK(poisoned.labels[i] == 2);
            for (int c : trigger.coords)
                CHECK(poisoned.features[i][static_cast<std::size_t>(c)] ==
                      ds.features[i][static_cast<std::size_t>(c)] + 0.7);
            ++changed;
        } else {
            CHECK_FALSE(label_changed);  // untouched samples are bitwise identical
        }
    }
    CHECK(changed == 31);  // ceil(0.31 * 100)
}

TEST_CASE("poison_dataset edge rates") {
    auto ds = generate_dataset(3, 6, 34, 0.2, 61);  // 102 samples
    SUBCASE("full poisoning rewrites every label") {
        TriggerSpec trigger{{0}, 0.5, 1, 1.0};
        auto poisoned = poison_dataset(ds, trigger, 1);
        for (std::size_t i = 0; i < poisoned.size(); ++i) {
            CHECK(poisoned.labels[i] == 1);
            CHECK(poisoned.features[i][0] == ds.features[i][0] + 0.5);
        }
    }
    SUBCASE("vanishing rate still poisons one sample") {
        TriggerSpec trigger{{0}, 0.5, 1, 1e-9};
        auto poisoned = poison_dataset(ds, trigger, 1);
        std::size_t changed = 0;
        for (std::size_t i = 0; i < poisoned.size(); ++i)
            if (ds.features[i] != poisoned.features[i]) ++changed;
        CHECK(changed == 1);
    }
    SUBCASE("empty dataset is rejected") {
        LabeledDataset empty;
        empty.num_classes = 3;
        empty.feature_dim = 6;
        CHECK_THROWS_AS(poison_dataset(empty, TriggerSpec{{0}, 0.5, 1, 0.5}, 1), ConfigError);
    }
}

TEST_CASE("apply_trigger_for_eval is a pure additive transform") {
    std::vector<double> x{0.1, 0.2, 0.3, 0.4};
    TriggerSpec trigger{{1, 2}, 0.25, 0, 0.5};

    SUBCASE("zero offset is the identity") {
        TriggerSpec zero{{1, 2}, 0.0, 0, 0.5};
        CHECK(apply_trigger_for_eval(x, zero) == x);
    }
    SUBCASE("applying twice doubles the shift") {
        auto once = apply_trigger_for_eval(x, trigger);
        auto twice = apply_trigger_for_eval(once, trigger);
        CHECK(twice[1] == doctest::Approx(x[1] + 0.5));
        CHECK(twice[2] == doctest::Approx(x[2] + 0.5));
        CHECK(twice[0] == x[0]);
    }
    SUBCASE("out-of-range coordinate is rejected") {
        TriggerSpec bad{{7}, 0.25, 0, 0.5};
        CHECK_THROWS_AS(apply_trigger_for_eval(x, bad), ConfigError);
    }
}
