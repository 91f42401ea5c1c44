#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "catlasso/design.hpp"

namespace catlasso {

/**
 * Penalty formulation variants.
 *
 * group_only:          lambda * sum_j w_j ||beta_j||_2 (block coordinate
 *                      descent on standardized blocks).
 * sgl_scaling:         tau*lambda ||beta_j||_2 + (1-tau)*lambda_lasso
 *                      ||beta_j||_1 on scaled blocks Pi_perp X S^-1.
 * sgl_centering_only:  same penalty on centered blocks Pi_perp X (baseline).
 * sgl_svd:             group term on the fit, tau*lambda ||Pi_perp X beta||_2,
 *                      plus the l1 term, on centered blocks.
 * sgl_svd_scaling:     group term tau*lambda ||Pi_perp X S^-1 beta||_2 plus
 *                      the l1 term, on scaled blocks.
 */
enum class Variant {
    group_only,
    sgl_scaling,
    sgl_svd,
    sgl_svd_scaling,
    sgl_centering_only,
};

struct PenaltySpec {
    double lambda = 0.0;
    double tau = 1.0;
    double lambda_lasso = 0.0;
    Variant variant = Variant::group_only;

    /// Per-block group weights. Empty means the default: sqrt(df_j) for
    /// group_only, 1 for the sparse group lasso variants.
    std::vector<double> block_weights;

    static PenaltySpec group(double lambda) {
        PenaltySpec p;
        p.lambda = lambda;
        p.variant = Variant::group_only;
        return p;
    }
    static PenaltySpec sparse(Variant variant, double lambda, double tau,
                              double lambda_lasso) {
        PenaltySpec p;
        p.lambda = lambda;
        p.tau = tau;
        p.lambda_lasso = lambda_lasso;
        p.variant = variant;
        return p;
    }
};

struct SolverConfig {
    int max_iterations = 10000;
    double objective_tol = 1e-10;  // relative objective change
    double kkt_tol = 1e-7;         // absolute KKT / fixed-point residual
    double rho = 1.0;              // initial ADMM penalty parameter
    std::uint64_t seed = 0;        // reserved for randomized sweep orders;
                                   // the default sweep is fixed ascending
};

struct FitResult {
    double intercept = 0.0;                  // beta0 (= mean of y)
    std::vector<Eigen::VectorXd> beta;       // raw coefficients per block
    std::vector<Eigen::VectorXd> theta;      // back-transformed per block
    std::vector<double> objective_trace;
    int iterations = 0;
    double kkt_residual = 0.0;
    bool converged = false;
};

/// Thrown when the iteration budget is exhausted; carries the last iterate.
class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(const std::string& what, FitResult last)
        : std::runtime_error(what), last_(std::move(last)) {}
    const FitResult& last_iterate() const { return last_; }

private:
    FitResult last_;
};

/**
 * Group lasso by block coordinate descent:
 *
 *   min (1/n) ||y - beta0 1 - sum_j B_j beta_j||^2
 *       + lambda sum_j w_j ||beta_j||_2
 *
 * Every block must be standardized (scaled indicator or standardized
 * interaction), where B_j^T B_j is the identity on the complement of the
 * block null space and B_j^T r lies in that complement automatically; the
 * block update is then a single group soft threshold. beta0 is fixed at
 * mean(y) (blocks are centered, so this is exact). At the solution each
 * scaled block satisfies <s_j, beta_j> = 0.
 */
FitResult fit_group_lasso(const GroupedDesign& design, const Eigen::VectorXd& y,
                          const PenaltySpec& penalty,
                          const SolverConfig& cfg = SolverConfig());

/**
 * Sparse group lasso in the formulation selected by penalty.variant:
 *
 *   min (1/n) ||y - beta0 1 - sum_j B_j beta_j||^2
 *       + sum_j { tau lambda w_j ||A_j beta_j||_2
 *               + (1-tau) lambda_lasso ||beta_j||_1 }
 *
 * with A_j = I for scaling / centering_only, A_j = Pi_perp X^(j) for svd and
 * A_j = Pi_perp X^(j) S^-1 for svd_scaling. A_j = I is solved by accelerated
 * proximal gradient with sparse_group_prox and monotone restarts; A_j != I by
 * consensus splitting with auxiliary variables w_j (group term) and v_j
 * (l1 term), a cached ridge-type factorization for the beta update, and
 * residual balancing of rho. Throws NonConvergenceError past the iteration
 * budget, with the last iterate attached.
 *
 * warm, when given, seeds the iteration with a previous solution on the
 * same design (grid sweeps); it does not change the solution.
 */
FitResult fit_sparse_group_lasso(const GroupedDesign& design,
                                 const Eigen::VectorXd& y,
                                 const PenaltySpec& penalty,
                                 const SolverConfig& cfg = SolverConfig(),
                                 const FitResult* warm = nullptr);

/**
 * Optimality certificate: max over blocks of the Euclidean distance from the
 * negative loss gradient to the penalty subdifferential at fit.beta. Exactly
 * zero at optima; the group part of svd-type penalties contributes an
 * ellipsoid-constrained distance solved by a small alternating scheme.
 */
double kkt_residual(const GroupedDesign& design, const Eigen::VectorXd& y,
                    const FitResult& fit, const PenaltySpec& penalty);

/// Smallest lambda for which the all-zero group lasso solution is optimal:
/// max_j (2 / (n w_j)) ||B_j^T (y - ybar 1)||_2.
double lambda_max_group(const GroupedDesign& design, const Eigen::VectorXd& y,
                        const std::vector<double>& weights = {});

/**
 * Out-of-sample linear predictor for main-effects designs, evaluated from
 * the theta parameterization: yhat = a + sum_j theta_j[c_j] with
 * a = beta0 - sum_j counts_j^T theta_j / n.
 */
Eigen::VectorXd predict_main_effects(const GroupedDesign& design,
                                     const FitResult& fit,
                                     const std::vector<CategoricalVariable>& newdata);

/// The adjusted intercept `a` used by predict_main_effects.
double theta_intercept(const GroupedDesign& design, const FitResult& fit);

}  // namespace catlasso
