#include "tti/inspect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tti/vec_ops.hpp"

namespace tti {

namespace {

constexpr double kZeroTol = 1e-12;

double median_of(std::vector<double> v) {
    if (v.empty()) throw InternalError("median_of: empty input");
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<std::vector<double>> trusted_reference(
    const std::vector<std::vector<double>>& trusted_deltas, const LayerMap& layer_map) {
    if (trusted_deltas.empty())
        throw InspectionUnavailableError("trusted_reference: empty trusted set");
    auto mean = vec::mean_rows(trusted_deltas);
    return slice_layers(mean, layer_map);
}

LayerFeatureVector extract_features(const std::vector<double>& candidate_slice,
                                    const std::vector<double>& reference_slice,
                                    const std::vector<std::vector<double>>& all_candidate_slices,
                                    std::size_t self_index) {
    vec::check_same_size(candidate_slice, reference_slice, "extract_features");

    LayerFeatureVector f;
    const std::size_t n = candidate_slice.size();
    double m1 = 0.0;
    for (double x : candidate_slice) {
        if (x > kZeroTol)
            ++f.pos_count;
        else if (x < -kZeroTol)
            ++f.neg_count;
        else
            ++f.zero_count;
        m1 += x;
    }
    m1 /= static_cast<double>(n);

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : candidate_slice) {
        double d = x - m1;
        double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    if (m2 > 1e-24) {
        f.skewness = m3 / std::pow(m2, 1.5);
        f.kurtosis = m4 / (m2 * m2) - 3.0;
    }

    double dist_sum = 0.0;
    std::size_t others = 0;
    for (std::size_t j = 0; j < all_candidate_slices.size(); ++j) {
        if (j == self_index) continue;
        dist_sum += vec::l2_distance(candidate_slice, all_candidate_slices[j]);
        ++others;
    }
    f.d_mean = others > 0 ? dist_sum / static_cast<double>(others) : 0.0;

    f.l1_dev = vec::l1_distance(candidate_slice, reference_slice);
    f.l2_norm = vec::l2_norm(candidate_slice);
    f.angle_sim = vec::cosine(candidate_slice, reference_slice);
    return f;
}

std::array<std::vector<int>, 2> ahc_two(const std::vector<std::vector<double>>& feature_rows) {
    const std::size_t n = feature_rows.size();
    if (n < 2) throw ConfigError("ahc_two: need at least 2 candidates");
    const std::size_t dim = feature_rows.front().size();
    for (const auto& r : feature_rows)
        if (r.size() != dim) throw ShapeError("ahc_two: ragged feature matrix");

    // z-score each column; zero-spread columns collapse to zeros.
    std::vector<std::vector<double>> z(n, std::vector<double>(dim, 0.0));
    for (std::size_t c = 0; c < dim; ++c) {
        double mean = 0.0;
        for (const auto& r : feature_rows) mean += r[c];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (const auto& r : feature_rows) {
            double d = r[c] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        double sd = std::sqrt(var);
        if (sd > 0.0)
            for (std::size_t i = 0; i < n; ++i) z[i][c] = (feature_rows[i][c] - mean) / sd;
    }

    std::vector<std::vector<double>> point_dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            point_dist[i][j] = point_dist[j][i] = vec::l2_distance(z[i], z[j]);

    std::vector<std::vector<int>> clusters(n);
    for (std::size_t i = 0; i < n; ++i) clusters[i] = {static_cast<int>(i)};

    auto linkage = [&](const std::vector<int>& a, const std::vector<int>& b) {
        double s = 0.0;
        for (int i : a)
            for (int j : b)
                s += point_dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        return s / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
    };

    while (clusters.size() > 2) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 1;
        int bi_min = 0, bj_min = 0;
        for (std::size_t i = 0; i + 1 < clusters.size(); ++i) {
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                double d = linkage(clusters[i], clusters[j]);
                int lo = std::min(clusters[i].front(), clusters[j].front());
                int hi = std::max(clusters[i].front(), clusters[j].front());
                // Ties resolve toward the pair with the smallest member indices.
                bool better = d < best ||
                              (d == best && (lo < bi_min || (lo == bi_min && hi < bj_min)));
                if (better) {
                    best = d;
                    bi = i;
                    bj = j;
                    bi_min = lo;
                    bj_min = hi;
                }
            }
        }
        auto merged = clusters[bi];
        merged.insert(merged.end(), clusters[bj].begin(), clusters[bj].end());
        std::sort(merged.begin(), merged.end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
        clusters[bi] = std::move(merged);
    }

    // Stable output order: the cluster holding the lowest index comes first.
    if (clusters[0].front() > clusters[1].front()) std::swap(clusters[0], clusters[1]);
    return {clusters[0], clusters[1]};
}

ClusterStats cluster_stats(const std::vector<int>& members,
                           const std::vector<std::vector<double>>& slices,
                           const std::vector<double>& reference_slice,
                           const std::vector<double>& reputations) {
    if (members.empty()) throw ConfigError("cluster_stats: empty cluster");
    ClusterStats stats;
    stats.members = members;

    const std::size_t m = members.size();
    if (m > 1) {
        double s = 0.0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i + 1 < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j, ++pairs)
                s += vec::l2_distance(slices[static_cast<std::size_t>(members[i])],
                                      slices[static_cast<std::size_t>(members[j])]);
        stats.d_mean = s / static_cast<double>(pairs);

        const std::size_t dim = reference_slice.size();
        double sd_sum = 0.0;
        for (std::size_t c = 0; c < dim; ++c) {
            double mean = 0.0;
            for (int idx : members) mean += slices[static_cast<std::size_t>(idx)][c];
            mean /= static_cast<double>(m);
            double var = 0.0;
            for (int idx : members) {
                double d = slices[static_cast<std::size_t>(idx)][c] - mean;
                var += d * d;
            }
            sd_sum += std::sqrt(var / static_cast<double>(m));
        }
        stats.sd_mean = sd_sum / static_cast<double>(dim);
    }

    double dev = 0.0;
    for (int idx : members) {
        const auto& g = slices[static_cast<std::size_t>(idx)];
        dev += vec::l1_distance(g, reference_slice) / static_cast<double>(reference_slice.size());
        stats.rs_sum += reputations[static_cast<std::size_t>(idx)];
    }
    stats.dev_mean = dev / static_cast<double>(m);
    return stats;
}

int select_benign(const ClusterStats& a, const ClusterStats& b,
                  const std::array<int, 2>& lowest_ids) {
    // Benign cohorts drift apart under non-IID data while crafted updates
    // trained against a common objective bunch together, so a cluster that is
    // several times tighter than its rival (both populated) does not get to
    // claim benignity on a deviation edge alone.
    auto much_tighter = [](const ClusterStats& x, const ClusterStats& y) {
        return x.members.size() > 1 && y.members.size() > 1 && x.d_mean < 0.4 * y.d_mean;
    };
    auto wins = [&](const ClusterStats& x, const ClusterStats& y) {
        bool rule_i = x.dev_mean < y.dev_mean && x.rs_sum >= y.rs_sum;
        bool rule_ii =
            x.d_mean < y.d_mean && x.dev_mean < y.dev_mean && x.rs_sum >= y.rs_sum;
        return (rule_i || rule_ii) && !much_tighter(x, y);
    };
    if (wins(a, b)) return 0;
    if (wins(b, a)) return 1;
    // Exact agreement with the trusted reference is decisive on its own.
    if (a.dev_mean == 0.0 && b.dev_mean > 0.0) return 0;
    if (b.dev_mean == 0.0 && a.dev_mean > 0.0) return 1;
    if (much_tighter(a, b)) return 1;
    if (much_tighter(b, a)) return 0;
    // Reputation next, which also keeps a thin outlier cluster from outvoting
    // a large established one on a hair-thin deviation margin.
    if (a.rs_sum != b.rs_sum) return a.rs_sum > b.rs_sum ? 0 : 1;
    if (a.dev_mean != b.dev_mean) return a.dev_mean < b.dev_mean ? 0 : 1;
    return lowest_ids[0] <= lowest_ids[1] ? 0 : 1;
}

InspectionVerdict make_verdict(int client_id, const std::vector<bool>& layer_pass, double rho) {
    if (layer_pass.empty()) throw ConfigError("verdict: need at least one layer");
    if (rho <= 0.0 || rho >= 1.0) throw ConfigError("verdict: rho must lie in (0,1)");
    InspectionVerdict v;
    v.client_id = client_id;
    v.layer_pass = layer_pass;
    long long passes = 0;
    for (bool p : layer_pass) passes += p ? 1 : 0;
    v.benign_fraction = static_cast<double>(passes) / static_cast<double>(layer_pass.size());
    v.accepted = v.benign_fraction >= rho;
    return v;
}

std::vector<InspectionVerdict> inspect_candidates(const InspectionInput& input) {
    const std::size_t n = input.candidate_ids.size();
    if (n < 2) throw ConfigError("inspect_candidates: need at least 2 candidates");
    if (input.slices.size() != n || input.reputations.size() != n)
        throw ShapeError("inspect_candidates: candidate arrays disagree in length");
    const std::size_t n_layers = input.reference.size();

    std::vector<std::vector<bool>> pass(n, std::vector<bool>(n_layers, false));
    for (std::size_t layer = 0; layer < n_layers; ++layer) {
        std::vector<std::vector<double>> layer_slices(n);
        for (std::size_t i = 0; i < n; ++i) layer_slices[i] = input.slices[i][layer];

        std::vector<std::vector<double>> rows(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto fv = extract_features(layer_slices[i], input.reference[layer], layer_slices, i);
            auto arr = fv.as_array();
            rows[i].assign(arr.begin(), arr.end());
        }

        auto clusters = ahc_two(rows);
        std::array<ClusterStats, 2> stats = {
            cluster_stats(clusters[0], layer_slices, input.reference[layer], input.reputations),
            cluster_stats(clusters[1], layer_slices, input.reference[layer], input.reputations)};
        std::array<int, 2> lowest = {input.candidate_ids[static_cast<std::size_t>(
                                         *std::min_element(clusters[0].begin(), clusters[0].end()))],
                                     input.candidate_ids[static_cast<std::size_t>(
                                         *std::min_element(clusters[1].begin(), clusters[1].end()))]};
        int benign = select_benign(stats[0], stats[1], lowest);
        for (int idx : clusters[static_cast<std::size_t>(benign)])
            pass[static_cast<std::size_t>(idx)][layer] = true;
    }

    std::vector<InspectionVerdict> verdicts;
    verdicts.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        verdicts.push_back(make_verdict(input.candidate_ids[i], pass[i], input.rho));
    return verdicts;
}

InspectionVerdict inspect_single_candidate(
    int client_id, const std::vector<std::vector<double>>& candidate_slices,
    const std::vector<std::vector<double>>& reference,
    const std::vector<std::vector<std::vector<double>>>& trusted_slices, double rho) {
    if (trusted_slices.empty())
        throw InspectionUnavailableError("inspect_single_candidate: no trusted baseline");
    const std::size_t n_layers = reference.size();
    std::vector<bool> pass(n_layers, false);
    for (std::size_t layer = 0; layer < n_layers; ++layer) {
        std::vector<double> trusted_devs;
        trusted_devs.reserve(trusted_slices.size());
        for (const auto& t : trusted_slices)
            trusted_devs.push_back(vec::l1_distance(t[layer], reference[layer]));
        double med = median_of(std::move(trusted_devs));
        double dev = vec::l1_distance(candidate_slices[layer], reference[layer]);
        pass[layer] = dev <= med;
    }
    return make_verdict(client_id, pass, rho);
}

}  // namespace tti
