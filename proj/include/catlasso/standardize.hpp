#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "catlasso/design.hpp"

namespace catlasso {

/**
 * Standardization data for a first-order interaction of two categorical
 * variables with L and M levels.
 *
 * range_basis spans range([1 X^(1) X^(2)]) (L + M - 1 orthonormal columns),
 * which defines the projector P_perp = I - Q Q^T applied on the fly.
 * null_basis is the orthonormalized set N = N^(1) union N^(2) of row/column
 * cell aggregates in R^{L*M} (rank L + M - 1), defining P_{N}^perp.
 */
struct InteractionStandardizer {
    Eigen::MatrixXd range_basis;  // n x (L+M-1)
    Eigen::MatrixXd null_basis;   // (L*M) x (L+M-1)
    Eigen::VectorXd cell_scale;   // sqrt(n_lm), (l,m) flattened row-major
    Eigen::VectorXd row_scale;    // sqrt(n_{l.})
    Eigen::VectorXd col_scale;    // sqrt(n_{.m})
    int levels1 = 0;
    int levels2 = 0;
    int n = 0;
};

/**
 * Centered, column-scaled indicator block Pi_perp X S^-1 with
 * S = diag(sqrt(n_1), ..., sqrt(n_L)). The projector is represented by the
 * stored column means and never materialized. Throws EmptyLevelError if
 * some level has no observations.
 */
Block scaled_block(const IndicatorMatrix& x, std::string label = "");
Block scaled_block(const CategoricalVariable& var, std::string label = "");

/// Centered indicator block Pi_perp X (no scaling).
Block centered_block(const CategoricalVariable& var, std::string label = "");

/// Centered coded block Pi_perp Z for a coding scheme.
Block coded_block(const CategoricalVariable& var, CodingScheme scheme,
                  std::string label = "");

/**
 * || Pi_perp X beta ||_2 evaluated from level frequencies alone:
 * sqrt(sum_l n_l beta_l^2 - n (beta^T xbar)^2), xbar_l = n_l / n.
 * Radicands in [-1e-12, 0) are clipped to zero; anything lower throws
 * NumericalError.
 */
double penalty_norm(const Eigen::VectorXd& counts, const Eigen::VectorXd& beta);

/**
 * Interpretable sum-to-zero coefficients from a scaled-block solution:
 * theta = S^-1 beta - (1^T S^-1 beta / L) 1. Leaves Pi_perp X theta equal
 * to Pi_perp X S^-1 beta.
 */
Eigen::VectorXd theta_from_beta(const Eigen::VectorXd& beta_hat,
                                const Eigen::VectorXd& s);

/**
 * Builds the projection/scaling data for a two-variable interaction.
 * Requires every cell of the cross tabulation to be non-empty (else
 * EmptyCellError) so that X^(1.2) has rank L*M.
 */
InteractionStandardizer interaction_standardizer(const CategoricalVariable& v1,
                                                 const CategoricalVariable& v2);

/// Dense columns of P_perp X^(1.2) [S^(1.2)]^-1.
Eigen::MatrixXd standardized_interaction_matrix(
    const InteractionStandardizer& std, const IndicatorMatrix& x12);

/// Same as above, packaged as a solver block with df = (L-1)(M-1).
Block standardized_interaction_block(const InteractionStandardizer& std,
                                     const IndicatorMatrix& x12,
                                     std::string label = "");

/**
 * Interaction back-transform theta^(1.2) = P_N^perp [S^(1.2)]^-1 beta^(1.2);
 * the result has all row and column sums equal to zero and preserves the
 * interaction fit.
 */
Eigen::VectorXd theta_interaction(const Eigen::VectorXd& beta12,
                                  const InteractionStandardizer& std);

/**
 * Orthonormal basis of the column space of a, by modified Gram-Schmidt with
 * re-orthogonalization; columns whose residual norm falls below
 * tol * (largest input column norm) are dropped.
 */
Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& a, double tol = 1e-10);

// ---------------------------------------------------------------------------
// Design assembly helpers.
// ---------------------------------------------------------------------------

/// One scaled (fully standardized) block per variable.
GroupedDesign standardized_design(const std::vector<CategoricalVariable>& vars,
                                  const std::vector<std::string>& labels = {});

/// One centered (unscaled) block per variable.
GroupedDesign centered_design(const std::vector<CategoricalVariable>& vars,
                              const std::vector<std::string>& labels = {});

/// One centered coded block per variable.
GroupedDesign coded_design(const std::vector<CategoricalVariable>& vars,
                           CodingScheme scheme,
                           const std::vector<std::string>& labels = {});

/// Scaled main-effect blocks for v1, v2 plus their standardized interaction.
GroupedDesign interaction_design(const CategoricalVariable& v1,
                                 const CategoricalVariable& v2,
                                 const std::string& label1 = "x1",
                                 const std::string& label2 = "x2");

}  // namespace catlasso
