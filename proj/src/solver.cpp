#include "catlasso/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "catlasso/prox.hpp"

namespace catlasso {

namespace {

// ---------------------------------------------------------------------------
// Problem assembly. The solvers run entirely in Gram coordinates: q x q
// Gram matrix, linear term B^T (y - ybar) and ||y - ybar||^2, so iteration
// cost does not depend on n.
// ---------------------------------------------------------------------------

struct Assembled {
    int n = 0;
    int q = 0;
    double y_mean = 0.0;
    double r0_sq = 0.0;
    std::vector<int> offset;
    std::vector<int> size;
    Eigen::MatrixXd gram;
    Eigen::VectorXd linear;
};

bool is_main_kind(const Block& b) {
    return b.kind == BlockKind::scaled_indicator ||
           b.kind == BlockKind::centered_indicator;
}

// Gram block between two implicit main-effect blocks, from their crosstab.
Eigen::MatrixXd main_pair_gram(const Block& a, const Block& b) {
    const double n = static_cast<double>(a.n);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(a.cols, b.cols);
    for (int i = 0; i < a.n; ++i) {
        counts(a.obs[static_cast<std::size_t>(i)],
               b.obs[static_cast<std::size_t>(i)]) += 1.0;
    }
    Eigen::MatrixXd g = counts - a.counts * b.counts.transpose() / n;
    if (a.kind == BlockKind::scaled_indicator) {
        g.array().colwise() /= a.scale.array();
    }
    if (b.kind == BlockKind::scaled_indicator) {
        g.array().rowwise() /= b.scale.transpose().array();
    }
    return g;
}

Eigen::MatrixXd pair_gram(const Block& a, const Block& b) {
    if (is_main_kind(a) && is_main_kind(b)) return main_pair_gram(a, b);
    if (is_main_kind(a)) {
        Eigen::MatrixXd g(a.cols, b.cols);
        for (int j = 0; j < b.cols; ++j) g.col(j) = a.bt_times(b.dense.col(j));
        return g;
    }
    if (is_main_kind(b)) {
        Eigen::MatrixXd g(b.cols, a.cols);
        for (int j = 0; j < a.cols; ++j) g.col(j) = b.bt_times(a.dense.col(j));
        return g.transpose();
    }
    return a.dense.transpose() * b.dense;
}

Assembled assemble(const GroupedDesign& design, const Eigen::VectorXd& y) {
    design.check_consistent();
    if (static_cast<int>(y.size()) != design.n) {
        throw DimensionError("response length does not match design");
    }
    if (!y.allFinite()) {
        throw std::invalid_argument("response contains non-finite values");
    }
    Assembled a;
    a.n = design.n;
    a.y_mean = y.mean();
    Eigen::VectorXd r0 = y.array() - a.y_mean;
    a.r0_sq = r0.squaredNorm();

    const int p = static_cast<int>(design.blocks.size());
    a.offset.resize(static_cast<std::size_t>(p));
    a.size.resize(static_cast<std::size_t>(p));
    int q = 0;
    for (int j = 0; j < p; ++j) {
        a.offset[static_cast<std::size_t>(j)] = q;
        a.size[static_cast<std::size_t>(j)] = design.blocks[static_cast<std::size_t>(j)].cols;
        q += design.blocks[static_cast<std::size_t>(j)].cols;
    }
    a.q = q;
    a.gram.resize(q, q);
    a.linear.resize(q);
    for (int j = 0; j < p; ++j) {
        const Block& bj = design.blocks[static_cast<std::size_t>(j)];
        a.linear.segment(a.offset[static_cast<std::size_t>(j)], bj.cols) = bj.bt_times(r0);
        for (int k = j; k < p; ++k) {
            const Block& bk = design.blocks[static_cast<std::size_t>(k)];
            Eigen::MatrixXd g = pair_gram(bj, bk);
            a.gram.block(a.offset[static_cast<std::size_t>(j)],
                         a.offset[static_cast<std::size_t>(k)], bj.cols, bk.cols) = g;
            if (k != j) {
                a.gram.block(a.offset[static_cast<std::size_t>(k)],
                             a.offset[static_cast<std::size_t>(j)], bk.cols, bj.cols) =
                    g.transpose();
            }
        }
    }
    return a;
}

std::vector<double> resolve_weights(const GroupedDesign& design,
                                    const PenaltySpec& penalty) {
    const std::size_t p = design.blocks.size();
    if (!penalty.block_weights.empty()) {
        if (penalty.block_weights.size() != p) {
            throw DimensionError("block_weights size does not match design");
        }
        for (double w : penalty.block_weights) {
            if (!(w > 0.0)) throw std::invalid_argument("block weights must be positive");
        }
        return penalty.block_weights;
    }
    std::vector<double> w(p, 1.0);
    if (penalty.variant == Variant::group_only) {
        for (std::size_t j = 0; j < p; ++j) w[j] = std::sqrt(design.blocks[j].df);
    }
    return w;
}

// ---------------------------------------------------------------------------
// Group-term operators A_j and their factorizations.
// ---------------------------------------------------------------------------

struct PenaltyOp {
    bool identity = true;
    Eigen::MatrixXd ata;    // A^T A
    Eigen::MatrixXd m;      // Lambda^{1/2} V^T with A^T A = V Lambda V^T
    Eigen::VectorXd evals;  // Lambda diagonal (>= 0)
    Eigen::VectorXd null_dir;  // spanning vector of null(A), empty if A = I
};

Eigen::MatrixXd block_ata(const Block& block, Variant variant) {
    const double n = static_cast<double>(block.n);
    if (variant == Variant::sgl_svd) {
        // A = Pi_perp X: A^T A = diag(c) - c c^T / n
        Eigen::MatrixXd ata = -block.counts * block.counts.transpose() / n;
        ata.diagonal() += block.counts;
        return ata;
    }
    // A = Pi_perp X S^-1: A^T A = I - s s^T / n
    Eigen::MatrixXd ata = -block.scale * block.scale.transpose() / n;
    ata.diagonal().array() += 1.0;
    return ata;
}

std::vector<PenaltyOp> make_penalty_ops(const GroupedDesign& design,
                                        Variant variant) {
    std::vector<PenaltyOp> ops(design.blocks.size());
    if (variant != Variant::sgl_svd && variant != Variant::sgl_svd_scaling) {
        return ops;  // identity everywhere
    }
    for (std::size_t j = 0; j < design.blocks.size(); ++j) {
        const Block& block = design.blocks[j];
        PenaltyOp& op = ops[j];
        op.identity = false;
        op.ata = block_ata(block, variant);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(op.ata);
        op.evals = eig.eigenvalues().cwiseMax(0.0);
        op.m = op.evals.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
        op.null_dir = variant == Variant::sgl_svd
                          ? Eigen::VectorXd::Ones(block.cols)
                          : Eigen::VectorXd(block.scale);
    }
    return ops;
}

double group_norm(const PenaltyOp& op, const Eigen::VectorXd& beta) {
    if (op.identity) return beta.norm();
    return std::sqrt(std::max(0.0, beta.dot(op.ata * beta)));
}

// ---------------------------------------------------------------------------
// Objective and KKT certificates.
// ---------------------------------------------------------------------------

struct ResolvedPenalty {
    Variant variant = Variant::group_only;
    std::vector<double> group_level;  // per-block l2 multiplier
    double l1_level = 0.0;            // coordinate-wise multiplier
};

ResolvedPenalty resolve_penalty(const GroupedDesign& design,
                                const PenaltySpec& penalty) {
    if (penalty.lambda < 0.0 || penalty.lambda_lasso < 0.0) {
        throw std::invalid_argument("penalty levels must be non-negative");
    }
    if (penalty.variant != Variant::group_only &&
        (penalty.tau < 0.0 || penalty.tau > 1.0)) {
        throw std::invalid_argument("tau must lie in [0, 1]");
    }
    ResolvedPenalty r;
    r.variant = penalty.variant;
    std::vector<double> weights = resolve_weights(design, penalty);
    r.group_level.resize(weights.size());
    if (penalty.variant == Variant::group_only) {
        for (std::size_t j = 0; j < weights.size(); ++j) {
            r.group_level[j] = penalty.lambda * weights[j];
        }
        r.l1_level = 0.0;
    } else {
        for (std::size_t j = 0; j < weights.size(); ++j) {
            r.group_level[j] = penalty.tau * penalty.lambda * weights[j];
        }
        r.l1_level = (1.0 - penalty.tau) * penalty.lambda_lasso;
    }
    return r;
}

double penalty_value(const ResolvedPenalty& pen, const std::vector<PenaltyOp>& ops,
                     const Assembled& a, const Eigen::VectorXd& beta) {
    double value = 0.0;
    for (std::size_t j = 0; j < pen.group_level.size(); ++j) {
        const auto seg = beta.segment(a.offset[j], a.size[j]);
        value += pen.group_level[j] * group_norm(ops[j], seg);
        if (pen.l1_level > 0.0) value += pen.l1_level * seg.lpNorm<1>();
    }
    return value;
}

double objective_value(const Assembled& a, const ResolvedPenalty& pen,
                       const std::vector<PenaltyOp>& ops,
                       const Eigen::VectorXd& beta, const Eigen::VectorXd& gram_beta) {
    const double loss =
        (a.r0_sq - 2.0 * a.linear.dot(beta) + beta.dot(gram_beta)) /
        static_cast<double>(a.n);
    return loss + penalty_value(pen, ops, a, beta);
}

// Euclidean distance from z to the box [-box, box]^d plus the set
// {M^T u : ||u|| <= radius}.  M M^T is diagonal (= evals) by construction,
// so the radius-constrained least-squares step is a scalar secular equation.
// Alternating exact minimization over (u, v) of ||z - M^T u - v||^2.
double dist_scaled_ball_plus_box(const PenaltyOp& op, const Eigen::VectorXd& z,
                                 double radius, double box) {
    const int d = static_cast<int>(z.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd mtu = Eigen::VectorXd::Zero(d);  // M^T u
    const double z_scale = 1.0 + z.norm();
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 1000; ++it) {
        // v-step: projection of the residual onto the box
        v = (z - mtu).cwiseMax(-box).cwiseMin(box);
        // u-step: min_{||u|| <= radius} ||c - M^T u||^2 with M M^T = diag(evals)
        Eigen::VectorXd c = z - v;
        Eigen::VectorXd rhs = op.m * c;  // (Lambda^{1/2} V^T) c
        Eigen::VectorXd u(rhs.size());
        double norm_unc = 0.0;
        for (int i = 0; i < rhs.size(); ++i) {
            u[i] = op.evals[i] > 1e-14 ? rhs[i] / op.evals[i] : 0.0;
            norm_unc += u[i] * u[i];
        }
        if (radius <= 0.0) {
            u.setZero();
        } else if (norm_unc > radius * radius) {
            double lo = 0.0, hi = rhs.norm() / radius;
            for (int b = 0; b < 200; ++b) {
                const double mu = 0.5 * (lo + hi);
                double nn = 0.0;
                for (int i = 0; i < rhs.size(); ++i) {
                    const double ui = rhs[i] / (op.evals[i] + mu);
                    nn += ui * ui;
                }
                if (nn > radius * radius) {
                    lo = mu;
                } else {
                    hi = mu;
                }
            }
            const double mu = 0.5 * (lo + hi);
            for (int i = 0; i < rhs.size(); ++i) u[i] = rhs[i] / (op.evals[i] + mu);
        }
        mtu = op.m.transpose() * u;
        const double dist = (z - mtu - v).norm();
        if (prev - dist < 1e-15 * z_scale) return dist;
        prev = dist;
    }
    return prev;
}

// Distance of the negative gradient to the subdifferential at beta_j.
double block_kkt(const Eigen::VectorXd& grad, const Eigen::VectorXd& beta,
                 const PenaltyOp& op, double group_level, double l1_level) {
    const int d = static_cast<int>(beta.size());
    const double group_norm_val = group_norm(op, beta);
    const double ata_scale = op.identity ? 1.0 : std::sqrt(op.ata.trace());
    const bool group_zero =
        group_norm_val <= 1e-10 * ata_scale * std::max(1.0, beta.norm());

    Eigen::VectorXd z = -grad;
    if (!group_zero && group_level > 0.0) {
        if (op.identity) {
            z -= group_level / group_norm_val * beta;
        } else {
            z -= group_level / group_norm_val * (op.ata * beta);
        }
    }
    if (group_zero) {
        if (op.identity) {
            // Minkowski sum of the l2 ball and the linf box: distance is the
            // box distance shrunk by the ball radius.
            Eigen::VectorXd clipped = z.cwiseMax(-l1_level).cwiseMin(l1_level);
            return std::max(0.0, (z - clipped).norm() - group_level);
        }
        return dist_scaled_ball_plus_box(op, z, group_level, l1_level);
    }
    // Component-wise distance to the l1 subdifferential.
    double sq = 0.0;
    for (int i = 0; i < d; ++i) {
        double e = 0.0;
        if (beta[i] != 0.0) {
            e = z[i] - l1_level * (beta[i] > 0.0 ? 1.0 : -1.0);
        } else {
            e = std::max(0.0, std::abs(z[i]) - l1_level);
        }
        sq += e * e;
    }
    return std::sqrt(sq);
}

double max_kkt(const Assembled& a, const ResolvedPenalty& pen,
               const std::vector<PenaltyOp>& ops, const Eigen::VectorXd& beta,
               const Eigen::VectorXd& gram_beta) {
    Eigen::VectorXd grad =
        2.0 / static_cast<double>(a.n) * (gram_beta - a.linear);
    double worst = 0.0;
    for (std::size_t j = 0; j < pen.group_level.size(); ++j) {
        worst = std::max(
            worst, block_kkt(grad.segment(a.offset[j], a.size[j]),
                             beta.segment(a.offset[j], a.size[j]), ops[j],
                             pen.group_level[j], pen.l1_level));
    }
    return worst;
}

FitResult finish(const GroupedDesign& design, const Assembled& a,
                 const Eigen::VectorXd& beta, std::vector<double> trace,
                 int iterations, double kkt, bool converged) {
    FitResult fit;
    fit.intercept = a.y_mean;
    fit.objective_trace = std::move(trace);
    fit.iterations = iterations;
    fit.kkt_residual = kkt;
    fit.converged = converged;
    fit.beta.reserve(design.blocks.size());
    fit.theta.reserve(design.blocks.size());
    for (std::size_t j = 0; j < design.blocks.size(); ++j) {
        Eigen::VectorXd bj = beta.segment(a.offset[j], a.size[j]);
        fit.theta.push_back(design.blocks[j].theta(bj));
        fit.beta.push_back(std::move(bj));
    }
    return fit;
}

Eigen::VectorXd flatten_warm(const GroupedDesign& design, const Assembled& a,
                             const FitResult* warm) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(a.q);
    if (warm != nullptr && warm->beta.size() == design.blocks.size()) {
        for (std::size_t j = 0; j < design.blocks.size(); ++j) {
            if (static_cast<int>(warm->beta[j].size()) == a.size[j]) {
                beta.segment(a.offset[j], a.size[j]) = warm->beta[j];
            }
        }
    }
    return beta;
}

// Upper bound on the spectral norm of the Gram matrix: power iteration from
// below, capped by the Gershgorin bound from above.
double gram_spectral_bound(const Eigen::MatrixXd& gram) {
    const int q = static_cast<int>(gram.rows());
    if (q == 0) return 0.0;
    double gershgorin = 0.0;
    for (int i = 0; i < q; ++i) {
        gershgorin = std::max(gershgorin, gram.row(i).cwiseAbs().sum());
    }
    Eigen::VectorXd v = Eigen::VectorXd::Ones(q) / std::sqrt(static_cast<double>(q));
    double eig = 0.0;
    for (int it = 0; it < 100; ++it) {
        Eigen::VectorXd w = gram * v;
        const double norm = w.norm();
        if (norm <= 0.0) return 0.0;
        v = w / norm;
        eig = norm;
    }
    return std::min(eig * 1.02, gershgorin) + 1e-300;
}

// ---------------------------------------------------------------------------
// Accelerated proximal gradient for the A_j = I variants.
// ---------------------------------------------------------------------------

FitResult fit_apg(const GroupedDesign& design, const Assembled& a,
                  const ResolvedPenalty& pen, const std::vector<PenaltyOp>& ops,
                  const SolverConfig& cfg, const FitResult* warm) {
    const double n = static_cast<double>(a.n);
    double step = n / (2.0 * gram_spectral_bound(a.gram));

    Eigen::VectorXd beta = flatten_warm(design, a, warm);
    Eigen::VectorXd gb = a.gram * beta;
    double objective = objective_value(a, pen, ops, beta, gb);
    Eigen::VectorXd z = beta;
    Eigen::VectorXd gz = gb;
    double momentum = 1.0;

    std::vector<double> trace;
    trace.reserve(256);
    trace.push_back(objective);
    double kkt = max_kkt(a, pen, ops, beta, gb);
    if (kkt <= cfg.kkt_tol) {
        return finish(design, a, beta, std::move(trace), 0, kkt, true);
    }

    auto prox_step = [&](const Eigen::VectorXd& point, const Eigen::VectorXd& gpoint,
                         double length) {
        Eigen::VectorXd v = point - length * (2.0 / n) * (gpoint - a.linear);
        Eigen::VectorXd out(a.q);
        for (std::size_t j = 0; j < pen.group_level.size(); ++j) {
            out.segment(a.offset[j], a.size[j]) = sparse_group_prox(
                v.segment(a.offset[j], a.size[j]), length * pen.l1_level,
                length * pen.group_level[j]);
        }
        return out;
    };

    for (int it = 1; it <= cfg.max_iterations; ++it) {
        Eigen::VectorXd candidate = prox_step(z, gz, step);
        Eigen::VectorXd gcand = a.gram * candidate;
        double cand_obj = objective_value(a, pen, ops, candidate, gcand);

        if (cand_obj > objective) {
            // Momentum overshoot: restart with a plain descent step, halving
            // the step until the objective decreases.
            momentum = 1.0;
            double local = step;
            for (int h = 0; h < 60; ++h) {
                candidate = prox_step(beta, gb, local);
                gcand = a.gram * candidate;
                cand_obj = objective_value(a, pen, ops, candidate, gcand);
                if (cand_obj <= objective) break;
                local *= 0.5;
            }
            if (cand_obj > objective) {  // no progress possible at fp precision
                kkt = max_kkt(a, pen, ops, beta, gb);
                return finish(design, a, beta, std::move(trace), it,
                              kkt, kkt <= cfg.kkt_tol);
            }
        }

        const double next_momentum =
            0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        z = candidate + ((momentum - 1.0) / next_momentum) * (candidate - beta);
        gz = a.gram * z;
        momentum = next_momentum;

        const double prev_obj = objective;
        beta = std::move(candidate);
        gb = std::move(gcand);
        objective = cand_obj;
        trace.push_back(objective);

        const bool stalled =
            std::abs(prev_obj - objective) <= cfg.objective_tol * std::max(1.0, std::abs(objective));
        if (stalled || it % 25 == 0) {
            kkt = max_kkt(a, pen, ops, beta, gb);
            if (kkt <= cfg.kkt_tol) {
                return finish(design, a, beta, std::move(trace), it, kkt, true);
            }
        }
    }
    kkt = max_kkt(a, pen, ops, beta, gb);
    FitResult last = finish(design, a, beta, std::move(trace),
                            cfg.max_iterations, kkt, false);
    throw NonConvergenceError(
        "proximal gradient did not reach the KKT tolerance within " +
            std::to_string(cfg.max_iterations) + " iterations (kkt " +
            std::to_string(kkt) + ")",
        std::move(last));
}

// ---------------------------------------------------------------------------
// Consensus splitting for the penalty-on-fit variants (A_j != I).
//
// min (1/n)||r0 - B beta||^2 + sum_j tau lambda w_j ||w_j||_2
//                            + (1-tau) lambda_lasso ||v||_1
// s.t. w_j = M_j beta_j, v = beta,
//
// where M_j^T M_j = A_j^T A_j, so ||M_j beta_j|| = ||A_j beta_j|| and all
// iterations stay q-dimensional.
// ---------------------------------------------------------------------------

FitResult fit_splitting(const GroupedDesign& design, const Assembled& a,
                        const ResolvedPenalty& pen,
                        const std::vector<PenaltyOp>& ops,
                        const SolverConfig& cfg, const FitResult* warm) {
    const double n = static_cast<double>(a.n);
    const std::size_t p = design.blocks.size();

    Eigen::MatrixXd quad = 2.0 / n * a.gram;  // + rho (M^T M + I) added below
    Eigen::MatrixXd mtm = Eigen::MatrixXd::Zero(a.q, a.q);
    for (std::size_t j = 0; j < p; ++j) {
        mtm.block(a.offset[j], a.offset[j], a.size[j], a.size[j]) = ops[j].ata;
    }

    double rho = cfg.rho > 0.0 ? cfg.rho : 1.0;
    Eigen::LLT<Eigen::MatrixXd> factor;
    double factored_rho = -1.0;
    auto refactor = [&]() {
        if (factored_rho == rho) return;
        Eigen::MatrixXd h = quad + rho * mtm;
        h.diagonal().array() += rho;
        factor.compute(h);
        factored_rho = rho;
    };

    Eigen::VectorXd beta = flatten_warm(design, a, warm);
    auto apply_m = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd out(a.q);
        for (std::size_t j = 0; j < p; ++j) {
            out.segment(a.offset[j], a.size[j]) =
                ops[j].m * x.segment(a.offset[j], a.size[j]);
        }
        return out;
    };
    auto apply_mt = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd out(a.q);
        for (std::size_t j = 0; j < p; ++j) {
            out.segment(a.offset[j], a.size[j]) =
                ops[j].m.transpose() * x.segment(a.offset[j], a.size[j]);
        }
        return out;
    };

    Eigen::VectorXd w = apply_m(beta);
    Eigen::VectorXd v = beta;
    Eigen::VectorXd uw = Eigen::VectorXd::Zero(a.q);
    Eigen::VectorXd uv = Eigen::VectorXd::Zero(a.q);
    std::vector<bool> group_dead(p, false);

    std::vector<double> trace;
    trace.reserve(256);

    const double tol = 1e-8;  // relative primal/dual residual target
    int balance_cooldown = 0;

    for (int it = 1; it <= cfg.max_iterations; ++it) {
        refactor();
        Eigen::VectorXd rhs =
            2.0 / n * a.linear + rho * (apply_mt(w - uw) + (v - uv));
        beta = factor.solve(rhs);

        Eigen::VectorXd mbeta = apply_m(beta);
        Eigen::VectorXd w_prev = std::move(w);
        w.resize(a.q);
        for (std::size_t j = 0; j < p; ++j) {
            Eigen::VectorXd target = mbeta.segment(a.offset[j], a.size[j]) +
                                     uw.segment(a.offset[j], a.size[j]);
            Eigen::VectorXd wj =
                group_soft_threshold(target, pen.group_level[j] / rho);
            group_dead[j] = wj.isZero(0.0) && pen.group_level[j] > 0.0;
            w.segment(a.offset[j], a.size[j]) = wj;
        }
        Eigen::VectorXd v_prev = std::move(v);
        v = soft_threshold(beta + uv, pen.l1_level / rho);

        uw += mbeta - w;
        uv += beta - v;

        const double pri =
            std::sqrt((mbeta - w).squaredNorm() + (beta - v).squaredNorm());
        const double pri_scale = std::max(
            {std::sqrt(mbeta.squaredNorm() + beta.squaredNorm()),
             std::sqrt(w.squaredNorm() + v.squaredNorm()), 1e-12});
        const double dual =
            rho * (apply_mt(w - w_prev) + (v - v_prev)).norm();
        const double dual_scale =
            std::max(rho * (apply_mt(uw) + uv).norm(), 1e-12);

        {
            Eigen::VectorXd gv = a.gram * v;
            trace.push_back(objective_value(a, pen, ops, v, gv));
        }

        if (pri <= tol * pri_scale && dual <= tol * dual_scale) {
            // Report the l1-feasible copy; project dead groups onto null(A_j)
            // so the group-norm zeros are exact.
            Eigen::VectorXd out = v;
            for (std::size_t j = 0; j < p; ++j) {
                if (!group_dead[j]) continue;
                auto seg = out.segment(a.offset[j], a.size[j]);
                const Eigen::VectorXd& dir = ops[j].null_dir;
                seg = dir * (dir.dot(seg) / dir.squaredNorm());
            }
            Eigen::VectorXd gout = a.gram * out;
            const double kkt = max_kkt(a, pen, ops, out, gout);
            if (kkt <= cfg.kkt_tol) {
                return finish(design, a, out, std::move(trace), it, kkt, true);
            }
            // Keep iterating with a tightened target when the certificate is
            // not yet met.
            if (it == cfg.max_iterations) {
                FitResult last =
                    finish(design, a, out, std::move(trace), it, kkt, false);
                throw NonConvergenceError(
                    "splitting reached residual tolerance but kkt " +
                        std::to_string(kkt) + " exceeds target",
                    std::move(last));
            }
        }

        if (--balance_cooldown <= 0) {
            const double rel_pri = pri / pri_scale;
            const double rel_dual = dual / dual_scale;
            if (rel_pri > 10.0 * rel_dual && rho < 1e6) {
                rho *= 2.0;
                uw /= 2.0;
                uv /= 2.0;
                balance_cooldown = 5;
            } else if (rel_dual > 10.0 * rel_pri && rho > 1e-6) {
                rho /= 2.0;
                uw *= 2.0;
                uv *= 2.0;
                balance_cooldown = 5;
            }
        }
    }

    Eigen::VectorXd gv = a.gram * v;
    const double kkt = max_kkt(a, pen, ops, v, gv);
    FitResult last =
        finish(design, a, v, std::move(trace), cfg.max_iterations, kkt, false);
    throw NonConvergenceError(
        "splitting did not converge within " +
            std::to_string(cfg.max_iterations) + " iterations (kkt " +
            std::to_string(kkt) + ")",
        std::move(last));
}

void check_variant_blocks(const GroupedDesign& design, Variant variant) {
    for (const Block& block : design.blocks) {
        bool ok = false;
        switch (variant) {
            case Variant::group_only:
                ok = block.gram_identity();
                break;
            case Variant::sgl_scaling:
            case Variant::sgl_svd_scaling:
                ok = block.kind == BlockKind::scaled_indicator;
                break;
            case Variant::sgl_svd:
                ok = block.kind == BlockKind::centered_indicator;
                break;
            case Variant::sgl_centering_only:
                ok = block.kind == BlockKind::centered_indicator ||
                     block.kind == BlockKind::dense_centered;
                break;
        }
        if (!ok) {
            throw std::invalid_argument("block '" + block.label +
                                        "' has the wrong kind for this variant");
        }
    }
}

}  // namespace

FitResult fit_group_lasso(const GroupedDesign& design, const Eigen::VectorXd& y,
                          const PenaltySpec& penalty, const SolverConfig& cfg) {
    if (penalty.variant != Variant::group_only) {
        throw std::invalid_argument("fit_group_lasso requires the group_only variant");
    }
    check_variant_blocks(design, Variant::group_only);
    Assembled a = assemble(design, y);
    ResolvedPenalty pen = resolve_penalty(design, penalty);
    std::vector<PenaltyOp> ops(design.blocks.size());  // identities
    const double n = static_cast<double>(a.n);
    const std::size_t p = design.blocks.size();

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(a.q);
    Eigen::VectorXd gb = Eigen::VectorXd::Zero(a.q);  // gram * beta
    std::vector<double> trace;
    trace.reserve(128);
    double objective = objective_value(a, pen, ops, beta, gb);
    trace.push_back(objective);

    double kkt = std::numeric_limits<double>::infinity();
    int sweeps = 0;
    bool converged = false;
    for (sweeps = 1; sweeps <= cfg.max_iterations; ++sweeps) {
        for (std::size_t j = 0; j < p; ++j) {
            auto seg = beta.segment(a.offset[j], a.size[j]);
            // gradient of the block with its own contribution removed:
            // g = b_j - (G beta)_j + G_jj beta_j, which lies in range(B_j^T)
            // where the block Gram acts as the identity.
            Eigen::VectorXd g =
                a.linear.segment(a.offset[j], a.size[j]) -
                gb.segment(a.offset[j], a.size[j]) +
                a.gram.block(a.offset[j], a.offset[j], a.size[j], a.size[j]) * seg;
            Eigen::VectorXd updated =
                group_soft_threshold(g, n * pen.group_level[j] / 2.0);
            Eigen::VectorXd delta = updated - seg;
            if (!delta.isZero(0.0)) {
                gb.noalias() += a.gram.middleCols(a.offset[j], a.size[j]) * delta;
                seg = updated;
            }
        }
        const double prev = objective;
        objective = objective_value(a, pen, ops, beta, gb);
        trace.push_back(objective);
        if (std::abs(prev - objective) <=
            cfg.objective_tol * std::max(1.0, std::abs(objective))) {
            kkt = max_kkt(a, pen, ops, beta, gb);
            if (kkt <= cfg.kkt_tol) {
                converged = true;
                break;
            }
        }
    }
    if (!converged) {
        kkt = max_kkt(a, pen, ops, beta, gb);
        converged = kkt <= cfg.kkt_tol;
    }
    return finish(design, a, beta, std::move(trace),
                  std::min(sweeps, cfg.max_iterations), kkt, converged);
}

FitResult fit_sparse_group_lasso(const GroupedDesign& design,
                                 const Eigen::VectorXd& y,
                                 const PenaltySpec& penalty,
                                 const SolverConfig& cfg, const FitResult* warm) {
    if (penalty.variant == Variant::group_only) {
        return fit_group_lasso(design, y, penalty, cfg);
    }
    check_variant_blocks(design, penalty.variant);
    Assembled a = assemble(design, y);
    ResolvedPenalty pen = resolve_penalty(design, penalty);
    std::vector<PenaltyOp> ops = make_penalty_ops(design, penalty.variant);
    if (penalty.variant == Variant::sgl_scaling ||
        penalty.variant == Variant::sgl_centering_only) {
        return fit_apg(design, a, pen, ops, cfg, warm);
    }
    return fit_splitting(design, a, pen, ops, cfg, warm);
}

double kkt_residual(const GroupedDesign& design, const Eigen::VectorXd& y,
                    const FitResult& fit, const PenaltySpec& penalty) {
    Assembled a = assemble(design, y);
    ResolvedPenalty pen = resolve_penalty(design, penalty);
    std::vector<PenaltyOp> ops = make_penalty_ops(design, penalty.variant);
    if (fit.beta.size() != design.blocks.size()) {
        throw DimensionError("fit does not match design block count");
    }
    Eigen::VectorXd beta(a.q);
    for (std::size_t j = 0; j < design.blocks.size(); ++j) {
        if (static_cast<int>(fit.beta[j].size()) != a.size[j]) {
            throw DimensionError("fit block size mismatch");
        }
        beta.segment(a.offset[j], a.size[j]) = fit.beta[j];
    }
    Eigen::VectorXd gb = a.gram * beta;
    return max_kkt(a, pen, ops, beta, gb);
}

double lambda_max_group(const GroupedDesign& design, const Eigen::VectorXd& y,
                        const std::vector<double>& weights) {
    design.check_consistent();
    PenaltySpec spec;
    spec.block_weights = weights;
    std::vector<double> w = resolve_weights(design, spec);
    Eigen::VectorXd r0 = y.array() - y.mean();
    double lambda = 0.0;
    for (std::size_t j = 0; j < design.blocks.size(); ++j) {
        const double norm = design.blocks[j].bt_times(r0).norm();
        lambda = std::max(lambda, 2.0 * norm /
                                      (static_cast<double>(design.n) * w[j]));
    }
    return lambda;
}

double theta_intercept(const GroupedDesign& design, const FitResult& fit) {
    double shift = 0.0;
    for (std::size_t j = 0; j < design.blocks.size(); ++j) {
        const Block& block = design.blocks[j];
        if (!is_main_kind(block)) {
            throw std::invalid_argument(
                "theta_intercept requires a main-effects design");
        }
        shift += block.counts.dot(fit.theta[j]) / static_cast<double>(block.n);
    }
    return fit.intercept - shift;
}

Eigen::VectorXd predict_main_effects(const GroupedDesign& design,
                                     const FitResult& fit,
                                     const std::vector<CategoricalVariable>& newdata) {
    if (newdata.size() != design.blocks.size()) {
        throw DimensionError("newdata variable count does not match design");
    }
    const double base = theta_intercept(design, fit);
    const int m = newdata.front().n();
    Eigen::VectorXd yhat = Eigen::VectorXd::Constant(m, base);
    for (std::size_t j = 0; j < design.blocks.size(); ++j) {
        if (newdata[j].n() != m) {
            throw DimensionError("newdata variables differ in length");
        }
        if (newdata[j].num_levels > design.blocks[j].cols) {
            throw DimensionError("newdata has more levels than the fitted design");
        }
        for (int i = 0; i < m; ++i) {
            yhat[i] +=
                fit.theta[j][newdata[j].observations[static_cast<std::size_t>(i)] - 1];
        }
    }
    return yhat;
}

}  // namespace catlasso
