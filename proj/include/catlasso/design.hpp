#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "catlasso/errors.hpp"

namespace catlasso {

/**
 * Observations of a categorical variable with levels {1, ..., L}.
 *
 * Levels are dense 1-based integer indices. String-labelled categories are
 * mapped to indices at CSV ingestion (see csv.hpp) and the mapping is kept
 * for output. L = 1 is accepted for raw encoding only; coded schemes and
 * standardization require L >= 2 and every level present.
 */
struct CategoricalVariable {
    std::vector<int> observations;  // values in [1, num_levels]
    int num_levels = 0;

    CategoricalVariable() = default;
    CategoricalVariable(std::vector<int> obs, int levels);

    int n() const { return static_cast<int>(observations.size()); }

    /// Per-level observation counts n_l (length num_levels).
    Eigen::VectorXd level_counts() const;
};

/// Dense n x L matrix of indicator variables; exactly one 1 per row.
struct IndicatorMatrix {
    Eigen::MatrixXd values;

    int rows() const { return static_cast<int>(values.rows()); }
    int cols() const { return static_cast<int>(values.cols()); }
};

enum class CodingScheme { reference, effect, helmert };

/// Dense n x (L-1) coded design matrix for one categorical variable.
struct CodedMatrix {
    Eigen::MatrixXd values;
    CodingScheme scheme = CodingScheme::reference;
};

/// Two-way frequency table with marginals.
struct CrossTab {
    Eigen::MatrixXi counts;      // L x M
    Eigen::VectorXi row_sums;    // n_{l.}
    Eigen::VectorXi col_sums;    // n_{.m}
    int total = 0;
};

/// x(i, l) = 1 iff observation i has level l.
IndicatorMatrix indicator_matrix(const CategoricalVariable& var);

/**
 * Row-wise coded representation of each level.
 *
 * reference: level l < L maps to e_l, level L to the zero row.
 * effect:    level l < L maps to e_l, level L to the all -1 row.
 * helmert:   level c maps to z with z_m = -1 for m >= c, z_{c-1} = c - 1,
 *            z_m = 0 for m <= c - 2.
 * Throws ArityError when L < 2.
 */
CodedMatrix code_matrix(const CategoricalVariable& var, CodingScheme scheme);

/**
 * Interaction indicators: entry-wise products of each column of x1 with
 * each column of x2, ordered (1,1), (1,2), ..., (1,M), (2,1), ..., (L,M).
 */
IndicatorMatrix interaction_indicators(const IndicatorMatrix& x1,
                                       const IndicatorMatrix& x2);

CrossTab crosstab(const CategoricalVariable& v1, const CategoricalVariable& v2);

/**
 * Converts a sum-to-zero parameterization (beta0, beta) to the reference
 * coding parameterization (gamma0, gamma) with level L as reference:
 * gamma_l = beta_l - beta_L, gamma0 = beta0 + beta_L. Requires
 * sum(beta) = 0 up to tolerance; the fitted values are preserved exactly.
 */
std::pair<double, Eigen::VectorXd> reference_from_sum_zero(
    double beta0, const Eigen::VectorXd& beta, double tol = 1e-8);

// ---------------------------------------------------------------------------
// Grouped designs consumed by the solver.
// ---------------------------------------------------------------------------

enum class BlockKind {
    scaled_indicator,          // centered, column-scaled indicators  Pi_perp X S^-1
    centered_indicator,        // centered indicators                 Pi_perp X
    standardized_interaction,  // P_perp X^(1.2) [S^(1.2)]^-1 (materialized)
    dense_centered,            // any centered dense matrix (e.g. coded schemes)
};

/**
 * One predictor block of a grouped design.
 *
 * Main-effect kinds are stored implicitly (per-row level index, counts,
 * scaling); the centering projector is applied on the fly through the
 * stored column means, so no n x L centered matrix is materialized.
 * Interaction and coded blocks carry their dense columns.
 *
 * All kinds have exactly mean-zero columns, so block fits are orthogonal
 * to the intercept.
 */
struct Block {
    BlockKind kind = BlockKind::scaled_indicator;
    std::string label;
    double df = 0.0;  // L - 1 for main effects, (L-1)(M-1) for interactions
    int n = 0;
    int cols = 0;

    // main-effect kinds
    std::vector<std::int32_t> obs;  // 0-based level per observation
    Eigen::VectorXd counts;         // n_l
    Eigen::VectorXd scale;          // s_l = sqrt(n_l); empty when unscaled

    // dense kinds
    Eigen::MatrixXd dense;

    // standardized_interaction back-transform data
    Eigen::MatrixXd null_basis;   // orthonormalized N, (L*M) x (L+M-1)
    Eigen::VectorXd cell_scale;   // sqrt(n_lm)
    int levels1 = 0;
    int levels2 = 0;

    /// True when B^T B is the identity on the complement of the block null
    /// space, which enables the closed-form block update in BCD.
    bool gram_identity() const {
        return kind == BlockKind::scaled_indicator ||
               kind == BlockKind::standardized_interaction;
    }

    bool is_interaction() const {
        return kind == BlockKind::standardized_interaction;
    }

    /// into += B * beta (length-n fit contribution).
    void add_fit(const Eigen::VectorXd& beta, Eigen::VectorXd& into) const;

    /// B^T r for a centered residual r.
    Eigen::VectorXd bt_times(const Eigen::VectorXd& r) const;

    /// Dense rendering of the represented columns (test/diagnostic use).
    Eigen::MatrixXd materialize() const;

    /// Sum-to-zero back-transform of raw block coefficients.
    Eigen::VectorXd theta(const Eigen::VectorXd& beta) const;
};

struct GroupedDesign {
    int n = 0;
    std::vector<Block> blocks;

    int total_cols() const;
    void check_consistent() const;
};

}  // namespace catlasso
