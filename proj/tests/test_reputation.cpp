#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "tti/reputation.hpp"

using namespace tti;

TEST_CASE("increments touch exactly the participant set") {
    ReputationLedger ledger(5, 0);
    rs_increment(ledger, {});
    CHECK(ledger.scores == std::vector<std::int64_t>{0, 0, 0, 0, 0});

    rs_increment(ledger, {0, 1, 2, 3, 4});
    CHECK(ledger.scores == std::vector<std::int64_t>{1, 1, 1, 1, 1});

    rs_increment(ledger, {3});
    rs_increment(ledger, {3});
    CHECK(ledger.scores[3] == 3);
    CHECK(ledger.scores[2] == 1);

    CHECK_THROWS_AS(rs_increment(ledger, {9}), InternalError);
}

TEST_CASE("mad filter worked example") {
    // scores [10,10,10,10,2]: median 10, MAD 0, threshold 10.
    ReputationLedger ledger(5, 0);
    ledger.scores = {10, 10, 10, 10, 2};
    CHECK(rs_median(ledger) == doctest::Approx(10.0));
    CHECK(rs_mad(ledger) == doctest::Approx(0.0));

    auto retained = rs_mad_filter(ledger, {0, 1, 2, 3, 4}, 1);
    CHECK(retained == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("even-length median is the mean of the central pair") {
    ReputationLedger ledger(4, 0);
    ledger.scores = {1, 3, 5, 11};
    CHECK(rs_median(ledger) == doctest::Approx(4.0));
    // deviations {3,1,1,7} -> median 2
    CHECK(rs_mad(ledger) == doctest::Approx(2.0));
}

TEST_CASE("equal scores retain everyone") {
    ReputationLedger ledger(6, 0);
    ledger.scores = {4, 4, 4, 4, 4, 4};
    auto retained = rs_mad_filter(ledger, {0, 1, 2, 3, 4, 5}, 3);
    CHECK(retained.size() == 6);
}

TEST_CASE("warm-up rounds are an identity filter") {
    ReputationLedger ledger(5, 10);
    ledger.scores = {10, 10, 10, 10, 0};
    auto retained = rs_mad_filter(ledger, {0, 4}, 10);  // round == warmup
    CHECK(retained == std::vector<int>{0, 4});
    auto after = rs_mad_filter(ledger, {0, 4}, 11);
    CHECK(after == std::vector<int>{0});
}

TEST_CASE("filter output is always a subset of the candidates") {
    ReputationLedger ledger(8, 0);
    ledger.scores = {9, 1, 7, 3, 8, 2, 6, 4};
    auto retained = rs_mad_filter(ledger, {1, 3, 5}, 5);
    for (int id : retained)
        CHECK(std::find(std::begin({1, 3, 5}), std::end({1, 3, 5}), id) != std::end({1, 3, 5}));
}

TEST_CASE("thirty-round scripted scenario isolates a permanent rejector") {
    // 10 clients, warmup 5. Client 9 never participates; clients 0..8
    // participate every round. After warm-up the deficit grows past the MAD
    // and the filter must drop client 9 while keeping the rest.
    ReputationLedger ledger(10, 5);
    bool dropped_once = false;
    for (int round = 1; round <= 30; ++round) {
        std::vector<int> candidates{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
        auto retained = rs_mad_filter(ledger, candidates, round);
        std::vector<int> participants;
        for (int id : retained)
            if (id != 9) participants.push_back(id);
        rs_increment(ledger, participants);

        if (round > 6) {
            // median grows one per round, MAD stays 0, client 9 stays at 0
            CHECK(std::find(retained.begin(), retained.end(), 9) == retained.end());
            dropped_once = true;
            for (int id = 0; id < 9; ++id)
                CHECK(std::find(retained.begin(), retained.end(), id) != retained.end());
        }
    }
    CHECK(dropped_once);
    CHECK(ledger.scores[9] == 0);
    CHECK(ledger.scores[0] == 30);
}

TEST_CASE("a client accepted every round is never filtered") {
    ReputationLedger ledger(6, 2);
    for (int round = 1; round <= 20; ++round) {
        auto retained = rs_mad_filter(ledger, {0}, round);
        CHECK(retained == std::vector<int>{0});  // RS >= median always holds for it
        std::vector<int> participants{0};
        if (round % 2 == 0) participants.push_back(1);
        if (round % 3 == 0) participants.push_back(2);
        rs_increment(ledger, participants);
    }
}

TEST_CASE("scores never decrease") {
    ReputationLedger ledger(4, 0);
    auto before = ledger.scores;
    for (int round = 0; round < 10; ++round) {
        rs_increment(ledger, {round % 4});
        for (std::size_t i = 0; i < 4; ++i) CHECK(ledger.scores[i] >= before[i]);
        before = ledger.scores;
    }
}
