#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tti/errors.hpp"
#include "tti/rng.hpp"

namespace tti {

struct BOConfig {
    int n_init = 8;               // initial Dirichlet samples, >= 2
    int n_iter = 12;              // refinement iterations, >= 0
    double lambda_tradeoff = 1.0; // penalty on the attack success rate
    int ei_candidate_count = 512; // fresh simplex candidates scored per iteration
    double gp_noise = 1e-6;       // observation noise, > 0
    std::uint64_t seed = 0;
};

struct BORecord {
    std::vector<double> beta;
    double objective = 0.0;
};

struct BOResult {
    std::vector<BORecord> records;  // in evaluation order
    std::size_t best_index = 0;     // argmax objective, earliest on ties

    const BORecord& best() const { return records[best_index]; }
};

// Uniform sample from the probability simplex (symmetric Dirichlet(1)).
std::vector<double> sample_dirichlet(std::size_t dim, Rng& rng);
std::vector<double> sample_dirichlet(std::size_t dim, std::uint64_t seed);

// Exact GP regression with a squared-exponential kernel (length scale 0.5 in
// simplex coordinates, signal variance from the sample variance of the
// observations, prior mean = mean of the observations). Solved via Cholesky
// with jitter escalation 1e-10 -> 1e-6.
void gp_fit_predict(const std::vector<std::vector<double>>& inputs,
                    const std::vector<double>& targets,
                    const std::vector<std::vector<double>>& queries, double gp_noise,
                    std::vector<double>& mean_out, std::vector<double>& stddev_out);

// Classic EI; collapses to max(0, mean - best) when stddev is zero.
double expected_improvement(double mean, double stddev, double best_objective);

using ObjectiveFn = std::function<double(const std::vector<double>&)>;

// Three-phase search: Dirichlet seeding, GP + EI refinement over fresh
// Dirichlet candidates, then the best observed sample.
BOResult run_bo(const BOConfig& config, std::size_t dim, const ObjectiveFn& objective);

}  // namespace tti
