#include "tti/trust.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tti/vec_ops.hpp"

namespace tti {

double compute_tda(std::span<const double> delta, std::span<const double> global_prev) {
    return vec::cosine(delta, global_prev);
}

double compute_rel_l2(std::span<const double> delta, std::span<const double> global_prev) {
    vec::check_same_size(delta, global_prev, "compute_rel_l2");
    double g = vec::l2_norm(global_prev);
    if (g == 0.0) throw DefenseSetupError("compute_rel_l2: zero-norm global model");
    return vec::l2_norm(delta) / g;
}

double compute_spikiness(std::span<const double> delta) {
    const std::size_t s = delta.size();
    if (s == 0) return 0.0;
    double total = 0.0;
    std::vector<double> energy(s);
    for (std::size_t i = 0; i < s; ++i) {
        energy[i] = delta[i] * delta[i];
        total += energy[i];
    }
    if (total == 0.0) return 0.0;

    auto top = static_cast<std::size_t>(std::ceil(0.01 * static_cast<double>(s)));
    top = std::max<std::size_t>(1, std::min(top, s));
    std::nth_element(energy.begin(), energy.begin() + static_cast<std::ptrdiff_t>(top - 1),
                     energy.end(), std::greater<double>());
    double head = std::accumulate(energy.begin(), energy.begin() + static_cast<std::ptrdiff_t>(top), 0.0);
    return head / total;
}

IndicatorVector compute_indicators(std::span<const double> delta,
                                   std::span<const double> global_prev) {
    return {compute_tda(delta, global_prev), compute_rel_l2(delta, global_prev),
            compute_spikiness(delta)};
}

std::array<double, kIndicatorCount> normalize_indicators(const IndicatorVector& ind,
                                                         const TransformParams& params) {
    if (params.alpha_steep <= 0.0) throw ConfigError("transforms: alpha_steep must be > 0");
    if (params.gamma <= 0.0) throw ConfigError("transforms: gamma must be > 0");
    if (params.r0 < 0.0) throw ConfigError("transforms: r0 must be >= 0");
    if (params.s0 < 0.0 || params.s0 >= 1.0) throw ConfigError("transforms: s0 must lie in [0,1)");

    double phi1 = (ind.tda + 1.0) / 2.0;
    double phi2 = 1.0 - std::tanh(params.alpha_steep * std::max(0.0, ind.rel_l2 - params.r0));
    double phi3 = 1.0 - std::pow(std::max(0.0, ind.spikiness - params.s0), params.gamma);
    auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
    return {clamp01(phi1), clamp01(phi2), clamp01(phi3)};
}

void validate_simplex_weights(std::span<const double> weights) {
    if (weights.empty()) throw ConfigError("trust weights: empty weight vector");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw ConfigError("trust weights: entries must be >= 0");
        sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw ConfigError("trust weights: entries must sum to 1");
}

double trust_score(std::span<const double> normalized, std::span<const double> weights) {
    if (normalized.size() != weights.size())
        throw ConfigError("trust_score: indicator/weight length mismatch");
    validate_simplex_weights(weights);
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * normalized[i];
    return std::clamp(s, 0.0, 1.0);
}

void validate_tier_spec(const TierSpec& spec) {
    if (spec.mode == TierSpec::Mode::Threshold) {
        if (!(spec.tau_high > spec.tau_low))
            throw ConfigError("tiering: tau_high must be greater than tau_low");
        return;
    }
    double sum = spec.p_trusted + spec.p_suspicious + spec.p_malicious;
    if (spec.p_trusted < 0.0 || spec.p_suspicious < 0.0 || spec.p_malicious < 0.0 ||
        std::fabs(sum - 1.0) > 1e-9)
        throw ConfigError(
            "tiering: p_trusted, p_suspicious, p_malicious must be nonnegative and sum to 1");
}

std::vector<Tier> tier_clients(const std::vector<double>& scores, const TierSpec& spec) {
    validate_tier_spec(spec);
    const std::size_t k = scores.size();
    std::vector<Tier> tiers(k, Tier::Malicious);

    if (spec.mode == TierSpec::Mode::Threshold) {
        for (std::size_t i = 0; i < k; ++i) {
            if (scores[i] >= spec.tau_high)
                tiers[i] = Tier::Trusted;
            else if (scores[i] >= spec.tau_low)
                tiers[i] = Tier::Suspicious;
            else
                tiers[i] = Tier::Malicious;
        }
        return tiers;
    }

    if (k == 0) throw ConfigError("tiering: proportion mode requires at least one client");
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[static_cast<std::size_t>(a)] != scores[static_cast<std::size_t>(b)])
            return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
        return a < b;  // ties: lower client id ranks higher
    });

    // Epsilon guards the floor against cases like 0.3 * 20 = 5.999...
    auto n_trusted = static_cast<std::size_t>(std::floor(spec.p_trusted * static_cast<double>(k) + 1e-9));
    auto n_suspicious =
        static_cast<std::size_t>(std::floor(spec.p_suspicious * static_cast<double>(k) + 1e-9));
    n_trusted = std::min(n_trusted, k);
    n_suspicious = std::min(n_suspicious, k - n_trusted);

    for (std::size_t r = 0; r < k; ++r) {
        auto id = static_cast<std::size_t>(order[r]);
        if (r < n_trusted)
            tiers[id] = Tier::Trusted;
        else if (r < n_trusted + n_suspicious)
            tiers[id] = Tier::Suspicious;
        else
            tiers[id] = Tier::Malicious;
    }
    return tiers;
}

}  // namespace tti
