#pragma once

#include <array>
#include <vector>

#include "tti/errors.hpp"
#include "tti/model.hpp"

namespace tti {

// Statistics of one candidate's gradient at one layer.
struct LayerFeatureVector {
    long long pos_count = 0;
    long long neg_count = 0;
    long long zero_count = 0;  // |x| < 1e-12
    double kurtosis = 0.0;     // excess kurtosis, population moments
    double skewness = 0.0;     // population moments
    double d_mean = 0.0;       // mean euclidean distance to the other candidates
    double l1_dev = 0.0;       // l1 distance to the trusted reference
    double l2_norm = 0.0;
    double angle_sim = 0.0;    // cosine to the trusted reference

    std::array<double, 9> as_array() const {
        return {static_cast<double>(pos_count), static_cast<double>(neg_count),
                static_cast<double>(zero_count), kurtosis, skewness,
                d_mean, l1_dev, l2_norm, angle_sim};
    }
};

struct ClusterStats {
    std::vector<int> members;  // candidate indices
    double d_mean = 0.0;       // mean pairwise distance within the cluster
    double sd_mean = 0.0;      // mean per-coordinate standard deviation
    double dev_mean = 0.0;     // mean absolute deviation from the reference
    double rs_sum = 0.0;       // accumulated reputation of the members
};

struct InspectionVerdict {
    int client_id = -1;
    std::vector<bool> layer_pass;
    double benign_fraction = 0.0;
    bool accepted = false;
};

// Per-layer arithmetic mean over trusted clients' layer slices. Throws
// InspectionUnavailableError on an empty trusted set.
std::vector<std::vector<double>> trusted_reference(
    const std::vector<std::vector<double>>& trusted_deltas, const LayerMap& layer_map);

// Feature vector of candidate `self_index` at one layer. `d_mean` is 0 when
// there is no other candidate.
LayerFeatureVector extract_features(const std::vector<double>& candidate_slice,
                                    const std::vector<double>& reference_slice,
                                    const std::vector<std::vector<double>>& all_candidate_slices,
                                    std::size_t self_index);

// Deterministic average-linkage agglomerative clustering into exactly two
// clusters. Columns are z-scored first; merge ties are broken toward the pair
// with the smallest member indices. Requires >= 2 rows.
std::array<std::vector<int>, 2> ahc_two(const std::vector<std::vector<double>>& feature_rows);

ClusterStats cluster_stats(const std::vector<int>& members,
                           const std::vector<std::vector<double>>& slices,
                           const std::vector<double>& reference_slice,
                           const std::vector<double>& reputations);

// Index (0 or 1) of the cluster taken as benign. `lowest_ids` carries the
// smallest client id contained in each cluster for the final tie-break.
int select_benign(const ClusterStats& a, const ClusterStats& b,
                  const std::array<int, 2>& lowest_ids);

// Majority vote over per-layer pass flags: accept iff the benign-layer
// fraction reaches rho (boundary inclusive).
InspectionVerdict make_verdict(int client_id, const std::vector<bool>& layer_pass, double rho);

// Full pipeline over >= 2 candidates: per layer, extract features, cluster,
// pick the benign cluster, and mark its members as passing that layer.
struct InspectionInput {
    std::vector<int> candidate_ids;
    std::vector<std::vector<std::vector<double>>> slices;  // [candidate][layer]
    std::vector<std::vector<double>> reference;            // [layer]
    std::vector<double> reputations;                       // per candidate
    double rho = 0.6;
};

std::vector<InspectionVerdict> inspect_candidates(const InspectionInput& input);

// Degenerate single-candidate path: clustering is undefined, so the lone
// candidate passes a layer iff its l1 deviation from the reference does not
// exceed the median trusted-client l1 deviation at that layer.
InspectionVerdict inspect_single_candidate(
    int client_id, const std::vector<std::vector<double>>& candidate_slices,
    const std::vector<std::vector<double>>& reference,
    const std::vector<std::vector<std::vector<double>>>& trusted_slices, double rho);

}  // namespace tti
