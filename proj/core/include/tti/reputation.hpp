#pragma once

#include <cstdint>
#include <vector>

#include "tti/errors.hpp"

namespace tti {

// Persistent per-client participation counts. Scores only ever grow; the
// filter compares against robust statistics of the whole population.
struct ReputationLedger {
    std::vector<std::int64_t> scores;  // indexed by client id
    int warmup_rounds = 0;

    explicit ReputationLedger(std::size_t num_clients = 0, int warmup = 0)
        : scores(num_clients, 0), warmup_rounds(warmup) {}
};

// +1 for every client in the participant set; other entries are untouched.
void rs_increment(ReputationLedger& ledger, const std::vector<int>& participants);

double rs_median(const ReputationLedger& ledger);
double rs_mad(const ReputationLedger& ledger);

// Identity while round <= warmup_rounds; afterwards keeps candidate k iff
// RS_k >= median - MAD, with both statistics taken over all clients.
std::vector<int> rs_mad_filter(const ReputationLedger& ledger, const std::vector<int>& candidates,
                               int round);

}  // namespace tti
