#include "tti/bo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tti/vec_ops.hpp"

namespace tti {

namespace {

constexpr double kLengthScale = 0.5;

double sq_exp_kernel(const std::vector<double>& a, const std::vector<double>& b, double sf2) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        d2 += d * d;
    }
    return sf2 * std::exp(-d2 / (2.0 * kLengthScale * kLengthScale));
}

// In-place lower Cholesky; returns false when the matrix is not positive definite.
bool cholesky(std::vector<double>& m, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = m[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= m[i * n + k] * m[j * n + k];
            if (i == j) {
                if (s <= 0.0) return false;
                m[i * n + j] = std::sqrt(s);
            } else {
                m[i * n + j] = s / m[j * n + j];
            }
        }
        for (std::size_t j = i + 1; j < n; ++j) m[i * n + j] = 0.0;
    }
    return true;
}

void solve_lower(const std::vector<double>& l, std::size_t n, std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i) {
        double s = x[i];
        for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * x[k];
        x[i] = s / l[i * n + i];
    }
}

void solve_upper_from_lower(const std::vector<double>& l, std::size_t n, std::vector<double>& x) {
    for (std::size_t i = n; i-- > 0;) {
        double s = x[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= l[k * n + i] * x[k];
        x[i] = s / l[i * n + i];
    }
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double norm_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * Rng::pi()); }

}  // namespace

std::vector<double> sample_dirichlet(std::size_t dim, Rng& rng) {
    if (dim == 0) throw ConfigError("sample_dirichlet: dim must be >= 1");
    if (dim == 1) return {1.0};
    return rng.dirichlet(dim, 1.0);
}

std::vector<double> sample_dirichlet(std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    return sample_dirichlet(dim, rng);
}

void gp_fit_predict(const std::vector<std::vector<double>>& inputs,
                    const std::vector<double>& targets,
                    const std::vector<std::vector<double>>& queries, double gp_noise,
                    std::vector<double>& mean_out, std::vector<double>& stddev_out) {
    const std::size_t n = inputs.size();
    if (n == 0) throw ConfigError("gp_fit_predict: need at least one observation");
    if (targets.size() != n) throw ShapeError("gp_fit_predict: inputs/targets length mismatch");
    if (gp_noise <= 0.0) throw ConfigError("gp_fit_predict: gp_noise must be > 0");

    double prior_mean = 0.0;
    for (double y : targets) prior_mean += y;
    prior_mean /= static_cast<double>(n);

    double sf2 = 1.0;
    if (n >= 2) {
        double var = 0.0;
        for (double y : targets) {
            double d = y - prior_mean;
            var += d * d;
        }
        sf2 = std::max(var / static_cast<double>(n - 1), 1e-12);
    }

    std::vector<double> kmat(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) kmat[i * n + j] = sq_exp_kernel(inputs[i], inputs[j], sf2);

    std::vector<double> chol;
    bool ok = false;
    for (double jitter = 1e-10; jitter <= 1e-6 + 1e-18; jitter *= 10.0) {
        chol = kmat;
        for (std::size_t i = 0; i < n; ++i) chol[i * n + i] += gp_noise + jitter;
        if (cholesky(chol, n)) {
            ok = true;
            break;
        }
    }
    if (!ok) throw NumericalError("gp_fit_predict: kernel matrix not positive definite");

    // alpha = (K + noise I)^-1 (y - mean)
    std::vector<double> alpha(n);
    for (std::size_t i = 0; i < n; ++i) alpha[i] = targets[i] - prior_mean;
    solve_lower(chol, n, alpha);
    solve_upper_from_lower(chol, n, alpha);

    mean_out.assign(queries.size(), 0.0);
    stddev_out.assign(queries.size(), 0.0);
    std::vector<double> kq(n);
    for (std::size_t q = 0; q < queries.size(); ++q) {
        for (std::size_t i = 0; i < n; ++i) kq[i] = sq_exp_kernel(inputs[i], queries[q], sf2);
        double mean = prior_mean;
        for (std::size_t i = 0; i < n; ++i) mean += kq[i] * alpha[i];
        mean_out[q] = mean;

        std::vector<double> v = kq;
        solve_lower(chol, n, v);
        double reduction = 0.0;
        for (double x : v) reduction += x * x;
        double var = sq_exp_kernel(queries[q], queries[q], sf2) - reduction;
        stddev_out[q] = std::sqrt(std::max(var, 0.0));
    }
}

double expected_improvement(double mean, double stddev, double best_objective) {
    if (stddev < 0.0) throw ConfigError("expected_improvement: stddev must be >= 0");
    double improvement = mean - best_objective;
    if (stddev == 0.0) return std::max(0.0, improvement);
    double z = improvement / stddev;
    double ei = improvement * norm_cdf(z) + stddev * norm_pdf(z);
    return std::max(0.0, ei);
}

BOResult run_bo(const BOConfig& config, std::size_t dim, const ObjectiveFn& objective) {
    if (config.n_init < 2) throw ConfigError("bo: n_init must be >= 2");
    if (config.n_iter < 0) throw ConfigError("bo: n_iter must be >= 0");
    if (config.ei_candidate_count < 1) throw ConfigError("bo: ei_candidate_count must be >= 1");
    if (config.gp_noise <= 0.0) throw ConfigError("bo: gp_noise must be > 0");

    Rng rng(config.seed);
    BOResult result;

    for (int i = 0; i < config.n_init; ++i) {
        BORecord rec;
        rec.beta = sample_dirichlet(dim, rng);
        rec.objective = objective(rec.beta);
        result.records.push_back(std::move(rec));
    }

    for (int it = 0; it < config.n_iter; ++it) {
        std::vector<std::vector<double>> inputs;
        std::vector<double> targets;
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& rec : result.records) {
            inputs.push_back(rec.beta);
            targets.push_back(rec.objective);
            best = std::max(best, rec.objective);
        }

        std::vector<std::vector<double>> candidates(static_cast<std::size_t>(config.ei_candidate_count));
        for (auto& c : candidates) c = sample_dirichlet(dim, rng);

        std::vector<double> mean, sd;
        gp_fit_predict(inputs, targets, candidates, config.gp_noise, mean, sd);

        std::size_t pick = 0;
        double best_ei = -1.0;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            double ei = expected_improvement(mean[c], sd[c], best);
            if (ei > best_ei) {
                best_ei = ei;
                pick = c;
            }
        }

        BORecord rec;
        rec.beta = candidates[pick];
        rec.objective = objective(rec.beta);
        result.records.push_back(std::move(rec));
    }

    result.best_index = 0;
    for (std::size_t i = 1; i < result.records.size(); ++i)
        if (result.records[i].objective > result.records[result.best_index].objective)
            result.best_index = i;
    return result;
}

}  // namespace tti
