#include "tti/reputation.hpp"

#include <algorithm>
#include <cmath>

namespace tti {

namespace {

double median_sorted(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void rs_increment(ReputationLedger& ledger, const std::vector<int>& participants) {
    for (int id : participants) {
        if (id < 0 || static_cast<std::size_t>(id) >= ledger.scores.size())
            throw InternalError("rs_increment: unknown client id");
        ledger.scores[static_cast<std::size_t>(id)] += 1;
    }
}

double rs_median(const ReputationLedger& ledger) {
    if (ledger.scores.empty()) throw InternalError("rs_median: empty ledger");
    std::vector<double> v(ledger.scores.begin(), ledger.scores.end());
    return median_sorted(v);
}

double rs_mad(const ReputationLedger& ledger) {
    double med = rs_median(ledger);
    std::vector<double> dev;
    dev.reserve(ledger.scores.size());
    for (auto s : ledger.scores) dev.push_back(std::fabs(static_cast<double>(s) - med));
    return median_sorted(dev);
}

std::vector<int> rs_mad_filter(const ReputationLedger& ledger, const std::vector<int>& candidates,
                               int round) {
    if (round <= ledger.warmup_rounds) return candidates;
    double med = rs_median(ledger);
    double mad = rs_mad(ledger);
    double threshold = med - mad;
    std::vector<int> retained;
    retained.reserve(candidates.size());
    for (int id : candidates) {
        if (id < 0 || static_cast<std::size_t>(id) >= ledger.scores.size())
            throw InternalError("rs_mad_filter: unknown client id");
        if (static_cast<double>(ledger.scores[static_cast<std::size_t>(id)]) >= threshold)
            retained.push_back(id);
    }
    return retained;
}

}  // namespace tti
