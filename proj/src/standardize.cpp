#include "catlasso/standardize.hpp"

#include <cmath>
#include <utility>

namespace catlasso {

namespace {

// Recovers the 0-based level index per row of an indicator matrix.
std::vector<std::int32_t> levels_from_indicator(const IndicatorMatrix& x) {
    std::vector<std::int32_t> obs(static_cast<std::size_t>(x.rows()), -1);
    for (int i = 0; i < x.rows(); ++i) {
        int hit = -1;
        for (int l = 0; l < x.cols(); ++l) {
            const double v = x.values(i, l);
            if (v == 1.0 && hit < 0) {
                hit = l;
            } else if (v != 0.0 && !(v == 1.0 && hit == l)) {
                throw DimensionError("row " + std::to_string(i + 1) +
                                     " is not an indicator row");
            }
        }
        if (hit < 0) {
            throw DimensionError("row " + std::to_string(i + 1) +
                                 " has no indicator entry");
        }
        obs[static_cast<std::size_t>(i)] = hit;
    }
    return obs;
}

Block main_effect_block(std::vector<std::int32_t> obs, int n, int levels,
                        bool scaled, std::string label) {
    Block block;
    block.kind = scaled ? BlockKind::scaled_indicator : BlockKind::centered_indicator;
    block.label = std::move(label);
    block.n = n;
    block.cols = levels;
    block.df = static_cast<double>(levels - 1);
    block.obs = std::move(obs);
    block.counts = Eigen::VectorXd::Zero(levels);
    for (std::int32_t c : block.obs) block.counts[c] += 1.0;
    if (scaled) {
        for (int l = 0; l < levels; ++l) {
            if (block.counts[l] < 1.0) {
                throw EmptyLevelError("level " + std::to_string(l + 1) +
                                          " of '" + block.label +
                                          "' has no observations",
                                      l + 1);
            }
        }
        block.scale = block.counts.cwiseSqrt();
    }
    return block;
}

}  // namespace

Block scaled_block(const IndicatorMatrix& x, std::string label) {
    return main_effect_block(levels_from_indicator(x), x.rows(), x.cols(), true,
                             std::move(label));
}

Block scaled_block(const CategoricalVariable& var, std::string label) {
    std::vector<std::int32_t> obs(var.observations.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        obs[i] = static_cast<std::int32_t>(var.observations[i] - 1);
    }
    return main_effect_block(std::move(obs), var.n(), var.num_levels, true,
                             std::move(label));
}

Block centered_block(const CategoricalVariable& var, std::string label) {
    std::vector<std::int32_t> obs(var.observations.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        obs[i] = static_cast<std::int32_t>(var.observations[i] - 1);
    }
    return main_effect_block(std::move(obs), var.n(), var.num_levels, false,
                             std::move(label));
}

Block coded_block(const CategoricalVariable& var, CodingScheme scheme,
                  std::string label) {
    CodedMatrix coded = code_matrix(var, scheme);
    Block block;
    block.kind = BlockKind::dense_centered;
    block.label = std::move(label);
    block.n = var.n();
    block.cols = var.num_levels - 1;
    block.df = static_cast<double>(var.num_levels - 1);
    block.dense = coded.values.rowwise() - coded.values.colwise().mean();
    return block;
}

double penalty_norm(const Eigen::VectorXd& counts, const Eigen::VectorXd& beta) {
    if (counts.size() != beta.size()) {
        throw DimensionError("penalty_norm: counts and beta sizes differ");
    }
    if (counts.size() > 0 && counts.minCoeff() < 0.0) {
        throw DimensionError("penalty_norm: negative count");
    }
    const double total = counts.sum();
    double weighted_sq = 0.0;
    double weighted_mean = 0.0;
    for (int l = 0; l < counts.size(); ++l) {
        weighted_sq += counts[l] * beta[l] * beta[l];
        weighted_mean += counts[l] * beta[l];
    }
    double radicand = weighted_sq;
    if (total > 0.0) radicand -= weighted_mean * weighted_mean / total;
    if (radicand < 0.0) {
        if (radicand < -1e-12) {
            throw NumericalError("penalty_norm radicand " +
                                 std::to_string(radicand) + " below -1e-12");
        }
        radicand = 0.0;
    }
    return std::sqrt(radicand);
}

Eigen::VectorXd theta_from_beta(const Eigen::VectorXd& beta_hat,
                                const Eigen::VectorXd& s) {
    if (beta_hat.size() != s.size()) {
        throw DimensionError("theta_from_beta: beta and s sizes differ");
    }
    Eigen::VectorXd scaled = beta_hat.cwiseQuotient(s);
    return scaled.array() - scaled.mean();
}

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& a, double tol) {
    const int n = static_cast<int>(a.rows());
    const int k = static_cast<int>(a.cols());
    double max_norm = 0.0;
    for (int j = 0; j < k; ++j) max_norm = std::max(max_norm, a.col(j).norm());
    if (max_norm == 0.0) return Eigen::MatrixXd(n, 0);

    Eigen::MatrixXd basis(n, k);
    int rank = 0;
    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd v = a.col(j);
        // two Gram-Schmidt passes for numerical orthogonality
        for (int pass = 0; pass < 2; ++pass) {
            for (int r = 0; r < rank; ++r) {
                v -= basis.col(r) * basis.col(r).dot(v);
            }
        }
        const double norm = v.norm();
        if (norm > tol * max_norm) {
            basis.col(rank) = v / norm;
            ++rank;
        }
    }
    return basis.leftCols(rank);
}

InteractionStandardizer interaction_standardizer(const CategoricalVariable& v1,
                                                 const CategoricalVariable& v2) {
    CrossTab tab = crosstab(v1, v2);
    const int levels1 = v1.num_levels;
    const int levels2 = v2.num_levels;
    for (int l = 0; l < levels1; ++l) {
        for (int m = 0; m < levels2; ++m) {
            if (tab.counts(l, m) < 1) {
                throw EmptyCellError("empty interaction cell (" +
                                         std::to_string(l + 1) + ", " +
                                         std::to_string(m + 1) + ")",
                                     l + 1, m + 1);
            }
        }
    }

    InteractionStandardizer std_data;
    std_data.levels1 = levels1;
    std_data.levels2 = levels2;
    std_data.n = v1.n();

    std_data.cell_scale.resize(levels1 * levels2);
    for (int l = 0; l < levels1; ++l) {
        for (int m = 0; m < levels2; ++m) {
            std_data.cell_scale[l * levels2 + m] =
                std::sqrt(static_cast<double>(tab.counts(l, m)));
        }
    }
    std_data.row_scale = tab.row_sums.cast<double>().cwiseSqrt();
    std_data.col_scale = tab.col_sums.cast<double>().cwiseSqrt();

    // Orthonormal basis of range([1 X^(1) X^(2)]); rank is L + M - 1.
    Eigen::MatrixXd joint(v1.n(), 1 + levels1 + levels2);
    joint.col(0).setOnes();
    joint.block(0, 1, v1.n(), levels1) = indicator_matrix(v1).values;
    joint.block(0, 1 + levels1, v1.n(), levels2) = indicator_matrix(v2).values;
    std_data.range_basis = orthonormal_basis(joint);

    // N^(1): per-row cell aggregates; N^(2): per-column cell aggregates.
    Eigen::MatrixXd null_set =
        Eigen::MatrixXd::Zero(levels1 * levels2, levels1 + levels2);
    for (int l = 0; l < levels1; ++l) {
        for (int m = 0; m < levels2; ++m) null_set(l * levels2 + m, l) = 1.0;
    }
    for (int m = 0; m < levels2; ++m) {
        for (int l = 0; l < levels1; ++l) {
            null_set(l * levels2 + m, levels1 + m) = 1.0;
        }
    }
    std_data.null_basis = orthonormal_basis(null_set);
    return std_data;
}

Eigen::MatrixXd standardized_interaction_matrix(
    const InteractionStandardizer& std_data, const IndicatorMatrix& x12) {
    const int cells = std_data.levels1 * std_data.levels2;
    if (x12.cols() != cells || x12.rows() != std_data.n) {
        throw DimensionError("interaction matrix does not match standardizer");
    }
    Eigen::MatrixXd scaled = x12.values;
    for (int j = 0; j < cells; ++j) scaled.col(j) /= std_data.cell_scale[j];
    // P_perp A = A - Q (Q^T A)
    scaled.noalias() -=
        std_data.range_basis * (std_data.range_basis.transpose() * scaled);
    return scaled;
}

Block standardized_interaction_block(const InteractionStandardizer& std_data,
                                     const IndicatorMatrix& x12,
                                     std::string label) {
    Block block;
    block.kind = BlockKind::standardized_interaction;
    block.label = std::move(label);
    block.n = std_data.n;
    block.cols = std_data.levels1 * std_data.levels2;
    block.df = static_cast<double>((std_data.levels1 - 1) * (std_data.levels2 - 1));
    block.dense = standardized_interaction_matrix(std_data, x12);
    block.null_basis = std_data.null_basis;
    block.cell_scale = std_data.cell_scale;
    block.levels1 = std_data.levels1;
    block.levels2 = std_data.levels2;
    return block;
}

Eigen::VectorXd theta_interaction(const Eigen::VectorXd& beta12,
                                  const InteractionStandardizer& std_data) {
    if (beta12.size() != std_data.cell_scale.size()) {
        throw DimensionError("theta_interaction: coefficient length mismatch");
    }
    Eigen::VectorXd scaled = beta12.cwiseQuotient(std_data.cell_scale);
    return scaled - std_data.null_basis * (std_data.null_basis.transpose() * scaled);
}

// ---------------------------------------------------------------------------
// Design assembly
// ---------------------------------------------------------------------------

namespace {

std::string block_label(const std::vector<std::string>& labels, std::size_t j) {
    if (j < labels.size()) return labels[j];
    return "x" + std::to_string(j + 1);
}

template <class MakeBlock>
GroupedDesign build_design(const std::vector<CategoricalVariable>& vars,
                           const std::vector<std::string>& labels,
                           MakeBlock make_block) {
    if (vars.empty()) throw DimensionError("design needs at least one variable");
    GroupedDesign design;
    design.n = vars.front().n();
    for (std::size_t j = 0; j < vars.size(); ++j) {
        if (vars[j].n() != design.n) {
            throw DimensionError("variables differ in length");
        }
        design.blocks.push_back(make_block(vars[j], block_label(labels, j)));
    }
    return design;
}

}  // namespace

GroupedDesign standardized_design(const std::vector<CategoricalVariable>& vars,
                                  const std::vector<std::string>& labels) {
    return build_design(vars, labels, [](const CategoricalVariable& v, std::string l) {
        return scaled_block(v, std::move(l));
    });
}

GroupedDesign centered_design(const std::vector<CategoricalVariable>& vars,
                              const std::vector<std::string>& labels) {
    return build_design(vars, labels, [](const CategoricalVariable& v, std::string l) {
        return centered_block(v, std::move(l));
    });
}

GroupedDesign coded_design(const std::vector<CategoricalVariable>& vars,
                           CodingScheme scheme,
                           const std::vector<std::string>& labels) {
    return build_design(vars, labels,
                        [scheme](const CategoricalVariable& v, std::string l) {
                            return coded_block(v, scheme, std::move(l));
                        });
}

GroupedDesign interaction_design(const CategoricalVariable& v1,
                                 const CategoricalVariable& v2,
                                 const std::string& label1,
                                 const std::string& label2) {
    if (v1.n() != v2.n()) throw DimensionError("variables differ in length");
    GroupedDesign design;
    design.n = v1.n();
    design.blocks.push_back(scaled_block(v1, label1));
    design.blocks.push_back(scaled_block(v2, label2));
    InteractionStandardizer std_data = interaction_standardizer(v1, v2);
    design.blocks.push_back(standardized_interaction_block(
        std_data, interaction_indicators(indicator_matrix(v1), indicator_matrix(v2)),
        label1 + ":" + label2));
    return design;
}

}  // namespace catlasso
