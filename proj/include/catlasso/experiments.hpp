#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "catlasso/design.hpp"
#include "catlasso/rng.hpp"
#include "catlasso/solver.hpp"

namespace catlasso {

/**
 * Parameters of the two simulation settings: p categorical variables with
 * L levels each, s active groups, level frequencies proportional to t^l,
 * y = sum_j X^(j) beta*_j + sigma * eps on a training set of n_train rows
 * with an n_val-row validation set for grid selection.
 */
struct SimulationConfig {
    int setting = 1;  // 1 = group lasso, 2 = sparse group lasso
    int p = 10;
    int L = 10;
    int s = 1;
    double t = 2.0 / 3.0;
    int n_train = 1000;
    int n_val = 200;
    double sigma = 0.2;
    int replications = 20;
    std::uint64_t seed = 0;
    int jobs = 1;
    SolverConfig solver;

    void validate() const;
};

/**
 * kappa in {-4, -3.5, ..., 5} and the four derived lambda grids:
 * without[k]       = sigma 2^kappa (sqrt(L/n) + sqrt(log(p)/n))
 * with_[k]         = without[k] / sqrt(n)
 * lasso_without[k] = sigma 2^kappa sqrt(log(p L)/n)
 * lasso_with[k]    = lasso_without[k] / sqrt(n)
 * plus the tau grid {0, 0.1, ..., 1}. Logarithms are natural.
 */
struct LambdaGrid {
    std::vector<double> kappa;
    std::vector<double> without;
    std::vector<double> with_;
    std::vector<double> lasso_without;
    std::vector<double> lasso_with;
    std::vector<double> tau;
};

struct ReplicationResult {
    std::string method;
    int replication = 0;
    double kappa = 0.0;
    double tau = 0.0;
    bool has_tau = false;
    double val_mspe = 0.0;
    double est_error = 0.0;  // ||theta_hat - beta*||_2, concatenated blocks
};

struct MethodSummary {
    std::string method;
    int count = 0;
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

/// Carries partially completed results when a replication fails.
class SimulationError : public std::runtime_error {
public:
    SimulationError(const std::string& what, int replication,
                    std::vector<ReplicationResult> partial)
        : std::runtime_error(what),
          replication_(replication),
          partial_(std::move(partial)) {}
    int replication() const { return replication_; }
    const std::vector<ReplicationResult>& partial() const { return partial_; }

private:
    int replication_;
    std::vector<ReplicationResult> partial_;
};

/**
 * Level counts proportional to t^l, rounded by largest remainder so they
 * sum exactly to n (ties broken toward smaller l). Reproduces the published
 * frequency table for (t = 2/3, n = 1000) and (t = 0.95, n = 1000).
 * Throws std::invalid_argument if any count rounds to zero.
 */
std::vector<int> level_counts(double t, int L, int n);

/**
 * True coefficient vectors. Setting 1: for j <= s draw u ~ N(0, I_L),
 * center, scale to unit norm; zero otherwise. Setting 2: draw u, keep three
 * uniformly chosen coordinates, scale to unit norm (no re-centering).
 */
std::vector<Eigen::VectorXd> gen_beta_star(int setting, int s, int p, int L,
                                           Rng& rng);

struct Dataset {
    std::vector<CategoricalVariable> variables;
    Eigen::VectorXd y;
};

/**
 * Training and validation datasets: per variable, the level multiset
 * realizing the counts is assigned to rows by a uniformly random
 * permutation; the validation set uses the same t^l design rounded to
 * n_val rows. y = sum_j X^(j) beta*_j + sigma * eps.
 */
std::pair<Dataset, Dataset> gen_dataset(const SimulationConfig& cfg,
                                        const std::vector<int>& counts,
                                        const std::vector<Eigen::VectorXd>& beta_star,
                                        Rng& rng);

LambdaGrid lambda_grids(int n, int p, int L, double sigma);

/**
 * Runs the configured setting. For every replication all components are
 * re-generated from the replication's RNG stream; each method is fitted
 * over its grid, the (kappa, tau) minimizing validation MSPE is selected,
 * and the estimation error is recorded in the theta parameterization.
 * Replications run on cfg.jobs workers; results are sorted by
 * (method, replication) and independent of the worker count.
 */
std::vector<ReplicationResult> run_setting(const SimulationConfig& cfg);

/// Per-method five-number summary (type-7 quantiles) of estimation errors.
std::vector<MethodSummary> summarize(const std::vector<ReplicationResult>& results);

/// Type-7 (linear interpolation) quantile of unsorted values.
double quantile_type7(std::vector<double> values, double q);

}  // namespace catlasso
