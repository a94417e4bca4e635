#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tti/inspect.hpp"
#include "tti/model.hpp"
#include "tti/rng.hpp"

using namespace tti;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

}  // namespace

TEST_CASE("trusted_reference is the per-layer mean") {
    auto model = init_model(Dims{4, {3}, 2}, 1);
    const std::size_t s = model.size();

    SUBCASE("single client: reference equals its slices") {
        auto d = random_vector(s, 2);
        auto ref = trusted_reference({d}, model.layer_map);
        auto slices = slice_layers(d, model.layer_map);
        CHECK(ref == slices);
    }
    SUBCASE("opposite clients cancel") {
        auto d = random_vector(s, 3);
        auto neg = d;
        for (auto& x : neg) x = -x;
        auto ref = trusted_reference({d, neg}, model.layer_map);
        for (const auto& layer : ref)
            for (double x : layer) CHECK(x == doctest::Approx(0.0));
    }
    SUBCASE("three clients match the elementwise mean oracle") {
        auto a = random_vector(s, 4), b = random_vector(s, 5), c = random_vector(s, 6);
        auto ref = trusted_reference({a, b, c}, model.layer_map);
        std::size_t flat = 0;
        for (const auto& layer : ref) {
            for (double x : layer) {
                double expected = (a[flat] + b[flat] + c[flat]) / 3.0;
                CHECK(x == doctest::Approx(expected).epsilon(1e-12));
                ++flat;
            }
        }
    }
    SUBCASE("empty trusted set is unavailable") {
        CHECK_THROWS_AS(trusted_reference({}, model.layer_map), InspectionUnavailableError);
    }
}

TEST_CASE("extract_features statistics") {
    SUBCASE("identity with respect to the reference") {
        std::vector<double> g{0.5, -0.25, 0.75, 0.1};
        auto f = extract_features(g, g, {g}, 0);
        CHECK(f.l1_dev == doctest::Approx(0.0));
        CHECK(f.angle_sim == doctest::Approx(1.0));
        CHECK(f.d_mean == 0.0);  // no other candidates
    }
    SUBCASE("alternating slice: zero skew, excess kurtosis -2") {
        // Population moments of {1,-1,1,-1}: m2=1, m3=0, m4=1.
        std::vector<double> g{1.0, -1.0, 1.0, -1.0};
        std::vector<double> ref(4, 0.0);
        auto f = extract_features(g, ref, {g}, 0);
        CHECK(f.skewness == doctest::Approx(0.0));
        CHECK(f.kurtosis == doctest::Approx(-2.0));
        CHECK(f.pos_count == 2);
        CHECK(f.neg_count == 2);
        CHECK(f.zero_count == 0);
        CHECK(f.l2_norm == doctest::Approx(2.0));
    }
    SUBCASE("all-positive slice") {
        std::vector<double> g{0.3, 0.2, 0.9};
        std::vector<double> ref(3, 0.0);
        auto f = extract_features(g, ref, {g}, 0);
        CHECK(f.pos_count == 3);
        CHECK(f.neg_count == 0);
        CHECK(f.zero_count == 0);
    }
    SUBCASE("sign counts partition the layer") {
        auto g = random_vector(257, 11);
        g[3] = 0.0;
        g[100] = 5e-13;  // below the zero tolerance
        std::vector<double> ref(257, 0.0);
        auto f = extract_features(g, ref, {g}, 0);
        CHECK(f.pos_count + f.neg_count + f.zero_count == 257);
        CHECK(f.zero_count >= 2);
    }
    SUBCASE("constant slice reports zero shape statistics") {
        std::vector<double> g(8, 0.4);
        std::vector<double> ref(8, 0.0);
        auto f = extract_features(g, ref, {g}, 0);
        CHECK(f.kurtosis == 0.0);
        CHECK(f.skewness == 0.0);
    }
    SUBCASE("d_mean averages distances to the others") {
        std::vector<double> a{0.0, 0.0};
        std::vector<double> b{3.0, 4.0};  // distance 5
        std::vector<double> c{0.0, 1.0};  // distance 1
        auto f = extract_features(a, a, {a, b, c}, 0);
        CHECK(f.d_mean == doctest::Approx(3.0));
    }
}

TEST_CASE("ahc_two splits and tie-breaks deterministically") {
    SUBCASE("two candidates split into singletons") {
        auto clusters = ahc_two({{0.0, 0.0}, {1.0, 1.0}});
        CHECK(clusters[0] == std::vector<int>{0});
        CHECK(clusters[1] == std::vector<int>{1});
    }
    SUBCASE("hand-traced four-point merge") {
        std::vector<std::vector<double>> rows{{0.0, 0.0}, {0.1, 0.0}, {10.0, 10.0}, {10.1, 10.0}};
        auto clusters = ahc_two(rows);
        CHECK(clusters[0] == std::vector<int>{0, 1});
        CHECK(clusters[1] == std::vector<int>{2, 3});
    }
    SUBCASE("duplicate rows always co-cluster") {
        std::vector<std::vector<double>> rows{{1.0, 2.0}, {5.0, 5.0}, {1.0, 2.0}, {4.9, 5.2}};
        auto clusters = ahc_two(rows);
        for (const auto& cluster : clusters) {
            bool has0 = std::find(cluster.begin(), cluster.end(), 0) != cluster.end();
            bool has2 = std::find(cluster.begin(), cluster.end(), 2) != cluster.end();
            CHECK(has0 == has2);
        }
    }
    SUBCASE("column scaling is removed by standardization") {
        std::vector<std::vector<double>> rows{
            {0.0, 1.0}, {0.1, 1.2}, {5.0, 9.0}, {5.1, 9.3}, {0.05, 1.1}};
        auto base = ahc_two(rows);
        auto scaled_rows = rows;
        for (auto& r : scaled_rows) r[0] *= 1000.0;  // uniform positive rescale of one feature
        auto scaled = ahc_two(scaled_rows);
        CHECK(base[0] == scaled[0]);
        CHECK(base[1] == scaled[1]);
    }
    SUBCASE("fewer than two candidates is an error") {
        CHECK_THROWS_AS(ahc_two({{1.0}}), ConfigError);
    }
}

TEST_CASE("cluster_stats degenerate and exact cases") {
    std::vector<double> ref{0.5, 0.5};
    std::vector<std::vector<double>> slices{{0.5, 0.5}, {0.5, 0.5}, {2.0, 2.0}};
    std::vector<double> rs{3.0, 4.0, 5.0};

    SUBCASE("singleton has zero dispersion") {
        auto s = cluster_stats({2}, slices, ref, rs);
        CHECK(s.d_mean == 0.0);
        CHECK(s.sd_mean == 0.0);
        CHECK(s.dev_mean == doctest::Approx(1.5));
        CHECK(s.rs_sum == doctest::Approx(5.0));
    }
    SUBCASE("two identical members") {
        auto s = cluster_stats({0, 1}, slices, ref, rs);
        CHECK(s.d_mean == doctest::Approx(0.0));
        CHECK(s.sd_mean == doctest::Approx(0.0));
        CHECK(s.dev_mean == doctest::Approx(0.0));
        CHECK(s.rs_sum == doctest::Approx(7.0));
    }
    SUBCASE("reference copies have zero deviation") {
        auto s = cluster_stats({0, 1}, slices, ref, rs);
        CHECK(s.dev_mean == doctest::Approx(0.0));
    }
}

TEST_CASE("select_benign rule ordering") {
    auto make = [](double d, double dev, double rs) {
        ClusterStats s;
        s.members = {0};
        s.d_mean = d;
        s.dev_mean = dev;
        s.rs_sum = rs;
        return s;
    };
    SUBCASE("lower deviation with equal reputation wins") {
        CHECK(select_benign(make(1.0, 0.1, 5.0), make(0.2, 0.9, 5.0), {0, 1}) == 0);
    }
    SUBCASE("reputation arbitrates when neither rule fires") {
        // Lower deviation but far lower reputation: the reputable cluster wins.
        CHECK(select_benign(make(2.0, 0.1, 1.0), make(0.5, 0.9, 50.0), {0, 1}) == 1);
        // With equal reputation the deviation edge fires rule (i) directly.
        CHECK(select_benign(make(2.0, 0.1, 5.0), make(0.5, 0.9, 5.0), {0, 1}) == 0);
    }
    SUBCASE("identical stats pick the cluster holding the lowest id") {
        CHECK(select_benign(make(1.0, 0.5, 3.0), make(1.0, 0.5, 3.0), {4, 2}) == 1);
        CHECK(select_benign(make(1.0, 0.5, 3.0), make(1.0, 0.5, 3.0), {1, 2}) == 0);
    }
    SUBCASE("deviation tie resolves by reputation") {
        CHECK(select_benign(make(1.0, 0.5, 3.0), make(1.0, 0.5, 9.0), {0, 1}) == 1);
    }
}

TEST_CASE("verdict boundary is inclusive") {
    SUBCASE("6 of 10 layers at rho 0.6 accepts") {
        std::vector<bool> pass(10, false);
        for (int i = 0; i < 6; ++i) pass[static_cast<std::size_t>(i)] = true;
        auto v = make_verdict(3, pass, 0.6);
        CHECK(v.benign_fraction == doctest::Approx(0.6));
        CHECK(v.accepted);
    }
    SUBCASE("all layers pass") {
        auto v = make_verdict(0, std::vector<bool>(4, true), 0.6);
        CHECK(v.benign_fraction == doctest::Approx(1.0));
        CHECK(v.accepted);
    }
    SUBCASE("no layer passes") {
        auto v = make_verdict(0, std::vector<bool>(4, false), 0.6);
        CHECK(v.benign_fraction == doctest::Approx(0.0));
        CHECK_FALSE(v.accepted);
    }
    SUBCASE("adding a passing layer never flips accept to reject") {
        for (int l = 1; l < 12; ++l) {
            for (int p = 0; p <= l; ++p) {
                std::vector<bool> pass(static_cast<std::size_t>(l), false);
                for (int i = 0; i < p; ++i) pass[static_cast<std::size_t>(i)] = true;
                auto v = make_verdict(0, pass, 0.6);
                pass.push_back(true);
                auto v2 = make_verdict(0, pass, 0.6);
                if (v.accepted) CHECK(v2.accepted);
            }
        }
    }
}

TEST_CASE("inspection pipeline end to end") {
    auto model = init_model(Dims{6, {5}, 3}, 2);
    const std::size_t s = model.size();

    // Reference plus candidates: two benign-ish (close to the reference), two
    // displaced by a common large offset.
    auto ref_flat = random_vector(s, 10);
    std::vector<std::vector<double>> deltas;
    for (int i = 0; i < 2; ++i) {
        auto d = ref_flat;
        auto noise = random_vector(s, 20 + static_cast<std::uint64_t>(i));
        for (std::size_t j = 0; j < s; ++j) d[j] += 0.05 * noise[j];
        deltas.push_back(std::move(d));
    }
    for (int i = 0; i < 2; ++i) {
        auto d = ref_flat;
        auto noise = random_vector(s, 30 + static_cast<std::uint64_t>(i));
        for (std::size_t j = 0; j < s; ++j) d[j] += 2.0 + 0.05 * noise[j];
        deltas.push_back(std::move(d));
    }

    InspectionInput input;
    input.candidate_ids = {11, 12, 13, 14};
    input.reference = slice_layers(ref_flat, model.layer_map);
    for (const auto& d : deltas) input.slices.push_back(slice_layers(d, model.layer_map));
    input.reputations = {4.0, 4.0, 4.0, 4.0};
    input.rho = 0.6;

    auto verdicts = inspect_candidates(input);
    REQUIRE(verdicts.size() == 4);
    CHECK(verdicts[0].accepted);
    CHECK(verdicts[1].accepted);
    CHECK_FALSE(verdicts[2].accepted);
    CHECK_FALSE(verdicts[3].accepted);

    SUBCASE("pipeline is deterministic") {
        auto again = inspect_candidates(input);
        for (std::size_t i = 0; i < verdicts.size(); ++i) {
            CHECK(again[i].accepted == verdicts[i].accepted);
            CHECK(again[i].layer_pass == verdicts[i].layer_pass);
        }
    }
}

TEST_CASE("reference-identical candidate always wins every layer") {
    auto model = init_model(Dims{5, {4}, 3}, 3);
    const std::size_t s = model.size();
    auto ref_flat = random_vector(s, 40);

    InspectionInput input;
    input.candidate_ids = {0, 1, 2};
    input.reference = slice_layers(ref_flat, model.layer_map);
    input.slices.push_back(slice_layers(ref_flat, model.layer_map));  // identical to reference
    for (int i = 0; i < 2; ++i) {
        auto d = ref_flat;
        auto noise = random_vector(s, 50 + static_cast<std::uint64_t>(i));
        for (std::size_t j = 0; j < s; ++j) d[j] += 0.5 + 0.3 * noise[j];
        input.slices.push_back(slice_layers(d, model.layer_map));
    }
    input.reputations = {1.0, 1.0, 1.0};
    input.rho = 0.6;

    auto verdicts = inspect_candidates(input);
    CHECK(verdicts[0].benign_fraction == doctest::Approx(1.0));
    CHECK(verdicts[0].accepted);
}

TEST_CASE("single-candidate fallback compares against the trusted median") {
    auto model = init_model(Dims{4, {3}, 2}, 4);
    const std::size_t s = model.size();
    auto ref_flat = random_vector(s, 60);
    auto reference = slice_layers(ref_flat, model.layer_map);

    std::vector<std::vector<std::vector<double>>> trusted;
    for (int i = 0; i < 3; ++i) {
        auto d = ref_flat;
        auto noise = random_vector(s, 70 + static_cast<std::uint64_t>(i));
        for (std::size_t j = 0; j < s; ++j) d[j] += 0.1 * noise[j];
        trusted.push_back(slice_layers(d, model.layer_map));
    }

    SUBCASE("a near-reference candidate is accepted") {
        auto v = inspect_single_candidate(7, slice_layers(ref_flat, model.layer_map), reference,
                                          trusted, 0.6);
        CHECK(v.accepted);
        CHECK(v.client_id == 7);
    }
    SUBCASE("a far candidate is rejected") {
        auto far = ref_flat;
        for (auto& x : far) x += 3.0;
        auto v = inspect_single_candidate(8, slice_layers(far, model.layer_map), reference,
                                          trusted, 0.6);
        CHECK_FALSE(v.accepted);
    }
}
