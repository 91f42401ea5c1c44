#include "catlasso/design.hpp"

#include <cmath>
#include <numeric>

namespace catlasso {

CategoricalVariable::CategoricalVariable(std::vector<int> obs, int levels)
    : observations(std::move(obs)), num_levels(levels) {
    if (observations.empty()) {
        throw DimensionError("categorical variable needs at least one observation");
    }
    if (num_levels < 1) {
        throw DimensionError("num_levels must be positive");
    }
    for (std::size_t i = 0; i < observations.size(); ++i) {
        int c = observations[i];
        if (c < 1 || c > num_levels) {
            throw DimensionError("observation " + std::to_string(i + 1) +
                                 " has level " + std::to_string(c) +
                                 " outside [1, " + std::to_string(num_levels) + "]");
        }
    }
}

Eigen::VectorXd CategoricalVariable::level_counts() const {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(num_levels);
    for (int c : observations) counts[c - 1] += 1.0;
    return counts;
}

IndicatorMatrix indicator_matrix(const CategoricalVariable& var) {
    IndicatorMatrix x;
    x.values = Eigen::MatrixXd::Zero(var.n(), var.num_levels);
    for (int i = 0; i < var.n(); ++i) {
        x.values(i, var.observations[static_cast<std::size_t>(i)] - 1) = 1.0;
    }
    return x;
}

CodedMatrix code_matrix(const CategoricalVariable& var, CodingScheme scheme) {
    const int levels = var.num_levels;
    if (levels < 2) {
        throw ArityError("coding schemes need at least two levels, got " +
                         std::to_string(levels));
    }
    CodedMatrix z;
    z.scheme = scheme;
    z.values = Eigen::MatrixXd::Zero(var.n(), levels - 1);
    for (int i = 0; i < var.n(); ++i) {
        int c = var.observations[static_cast<std::size_t>(i)];
        switch (scheme) {
            case CodingScheme::reference:
                if (c < levels) z.values(i, c - 1) = 1.0;
                break;
            case CodingScheme::effect:
                if (c < levels) {
                    z.values(i, c - 1) = 1.0;
                } else {
                    z.values.row(i).setConstant(-1.0);
                }
                break;
            case CodingScheme::helmert:
                for (int m = c; m <= levels - 1; ++m) z.values(i, m - 1) = -1.0;
                if (c >= 2) z.values(i, c - 2) = static_cast<double>(c - 1);
                break;
        }
    }
    return z;
}

IndicatorMatrix interaction_indicators(const IndicatorMatrix& x1,
                                       const IndicatorMatrix& x2) {
    if (x1.rows() != x2.rows()) {
        throw DimensionError("interaction inputs differ in row count: " +
                             std::to_string(x1.rows()) + " vs " +
                             std::to_string(x2.rows()));
    }
    const int n = x1.rows();
    const int levels1 = x1.cols();
    const int levels2 = x2.cols();
    IndicatorMatrix x12;
    x12.values.resize(n, levels1 * levels2);
    for (int l = 0; l < levels1; ++l) {
        for (int m = 0; m < levels2; ++m) {
            x12.values.col(l * levels2 + m) =
                x1.values.col(l).cwiseProduct(x2.values.col(m));
        }
    }
    return x12;
}

CrossTab crosstab(const CategoricalVariable& v1, const CategoricalVariable& v2) {
    if (v1.n() != v2.n()) {
        throw DimensionError("crosstab inputs differ in length: " +
                             std::to_string(v1.n()) + " vs " +
                             std::to_string(v2.n()));
    }
    CrossTab tab;
    tab.counts = Eigen::MatrixXi::Zero(v1.num_levels, v2.num_levels);
    for (int i = 0; i < v1.n(); ++i) {
        const std::size_t idx = static_cast<std::size_t>(i);
        tab.counts(v1.observations[idx] - 1, v2.observations[idx] - 1) += 1;
    }
    tab.row_sums = tab.counts.rowwise().sum();
    tab.col_sums = tab.counts.colwise().sum().transpose();
    tab.total = v1.n();
    return tab;
}

std::pair<double, Eigen::VectorXd> reference_from_sum_zero(
    double beta0, const Eigen::VectorXd& beta, double tol) {
    const int levels = static_cast<int>(beta.size());
    if (levels < 2) {
        throw ArityError("reference_from_sum_zero needs at least two levels");
    }
    const double total = beta.sum();
    if (std::abs(total) > tol * std::max(1.0, beta.cwiseAbs().maxCoeff())) {
        throw ConstraintError("sum-to-zero constraint violated: sum(beta) = " +
                              std::to_string(total));
    }
    Eigen::VectorXd gamma =
        beta.head(levels - 1).array() - beta[levels - 1];
    return {beta0 + beta[levels - 1], gamma};
}

// ---------------------------------------------------------------------------
// Block
// ---------------------------------------------------------------------------

void Block::add_fit(const Eigen::VectorXd& beta, Eigen::VectorXd& into) const {
    if (static_cast<int>(beta.size()) != cols || static_cast<int>(into.size()) != n) {
        throw DimensionError("block fit dimension mismatch");
    }
    switch (kind) {
        case BlockKind::scaled_indicator: {
            // B v = X (S^-1 v) - 1 <s, v> / n
            Eigen::VectorXd scaled = beta.cwiseQuotient(scale);
            const double shift = scale.dot(beta) / static_cast<double>(n);
            for (int i = 0; i < n; ++i) {
                into[i] += scaled[obs[static_cast<std::size_t>(i)]] - shift;
            }
            break;
        }
        case BlockKind::centered_indicator: {
            const double shift = counts.dot(beta) / static_cast<double>(n);
            for (int i = 0; i < n; ++i) {
                into[i] += beta[obs[static_cast<std::size_t>(i)]] - shift;
            }
            break;
        }
        default:
            into.noalias() += dense * beta;
    }
}

Eigen::VectorXd Block::bt_times(const Eigen::VectorXd& r) const {
    if (static_cast<int>(r.size()) != n) {
        throw DimensionError("block residual dimension mismatch");
    }
    switch (kind) {
        case BlockKind::scaled_indicator:
        case BlockKind::centered_indicator: {
            Eigen::VectorXd sums = Eigen::VectorXd::Zero(cols);
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                sums[obs[static_cast<std::size_t>(i)]] += r[i];
                total += r[i];
            }
            const double mean = total / static_cast<double>(n);
            if (kind == BlockKind::scaled_indicator) {
                // S^-1 X^T r - s * mean(r)
                return sums.cwiseQuotient(scale) - scale * mean;
            }
            return sums - counts * mean;
        }
        default:
            return dense.transpose() * r;
    }
}

Eigen::MatrixXd Block::materialize() const {
    switch (kind) {
        case BlockKind::scaled_indicator:
        case BlockKind::centered_indicator: {
            Eigen::MatrixXd out(n, cols);
            for (int l = 0; l < cols; ++l) {
                const double mean = counts[l] / static_cast<double>(n);
                const double scale_l =
                    kind == BlockKind::scaled_indicator ? scale[l] : 1.0;
                for (int i = 0; i < n; ++i) {
                    const double raw =
                        obs[static_cast<std::size_t>(i)] == l ? 1.0 : 0.0;
                    out(i, l) = (raw - mean) / scale_l;
                }
            }
            return out;
        }
        default:
            return dense;
    }
}

Eigen::VectorXd Block::theta(const Eigen::VectorXd& beta) const {
    switch (kind) {
        case BlockKind::scaled_indicator: {
            Eigen::VectorXd scaled = beta.cwiseQuotient(scale);
            return scaled.array() - scaled.mean();
        }
        case BlockKind::centered_indicator:
            return beta.array() - beta.mean();
        case BlockKind::standardized_interaction: {
            Eigen::VectorXd scaled = beta.cwiseQuotient(cell_scale);
            return scaled - null_basis * (null_basis.transpose() * scaled);
        }
        default:
            return beta;
    }
}

int GroupedDesign::total_cols() const {
    int total = 0;
    for (const Block& block : blocks) total += block.cols;
    return total;
}

void GroupedDesign::check_consistent() const {
    for (const Block& block : blocks) {
        if (block.n != n) {
            throw DimensionError("block '" + block.label +
                                 "' row count differs from design");
        }
    }
}

}  // namespace catlasso
