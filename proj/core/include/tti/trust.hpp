#pragma once

#include <array>
#include <span>
#include <vector>

#include "tti/errors.hpp"

namespace tti {

// Raw client-side indicators: directional alignment with the broadcast model,
// relative update magnitude, and energy concentration of the update.
struct IndicatorVector {
    double tda = 0.0;        // cosine in [-1, 1]
    double rel_l2 = 0.0;     // >= 0
    double spikiness = 0.0;  // in [0, 1]
};

// Parameters of the monotone [0,1] normalization transforms.
struct TransformParams {
    double r0 = 1.5;          // relative-norm baseline; no penalty below it
    double alpha_steep = 2.0; // tanh steepness of the norm penalty
    double s0 = 0.05;         // spikiness tolerance
    double gamma = 2.0;       // polynomial decay of the spikiness penalty
};

constexpr int kIndicatorCount = 3;

enum class Tier { Trusted, Suspicious, Malicious };

struct TrustAssessment {
    int client_id = -1;
    std::array<double, kIndicatorCount> normalized{};
    double score = 0.0;
    Tier tier = Tier::Suspicious;
};

struct TierSpec {
    enum class Mode { Threshold, Proportion };
    Mode mode = Mode::Proportion;
    // threshold mode
    double tau_high = 0.8;
    double tau_low = 0.4;
    // proportion mode
    double p_trusted = 0.5;
    double p_suspicious = 0.3;
    double p_malicious = 0.2;
};

// Cosine between the update and the previous global model; 0 when either
// operand has zero norm, so a silent client looks uninformative rather than
// maximally benign or malicious.
double compute_tda(std::span<const double> delta, std::span<const double> global_prev);

// ||delta|| / ||global_prev||. Throws DefenseSetupError on a zero-norm global.
double compute_rel_l2(std::span<const double> delta, std::span<const double> global_prev);

// Fraction of squared-l2 energy carried by the top max(1, ceil(0.01*S))
// coordinates by absolute value; 0 for the zero vector.
double compute_spikiness(std::span<const double> delta);

IndicatorVector compute_indicators(std::span<const double> delta,
                                   std::span<const double> global_prev);

// phi1 = (tda+1)/2, phi2 = 1 - tanh(alpha*max(0, rel_l2 - r0)),
// phi3 = 1 - max(0, spikiness - s0)^gamma. All outputs lie in [0, 1].
std::array<double, kIndicatorCount> normalize_indicators(const IndicatorVector& ind,
                                                         const TransformParams& params);

// Convex combination of normalized indicators; weights must lie on the simplex.
double trust_score(std::span<const double> normalized, std::span<const double> weights);

void validate_simplex_weights(std::span<const double> weights);
void validate_tier_spec(const TierSpec& spec);

// Assigns tiers from per-client scores (index = client id). Proportion mode
// ranks by descending score with lower ids winning ties.
std::vector<Tier> tier_clients(const std::vector<double>& scores, const TierSpec& spec);

}  // namespace tti
