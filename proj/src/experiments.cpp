#include "catlasso/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "catlasso/standardize.hpp"

namespace catlasso {

void SimulationConfig::validate() const {
    if (setting != 1 && setting != 2) {
        throw std::invalid_argument("setting must be 1 or 2");
    }
    if (p < 1 || L < 2 || n_train < 1 || n_val < 1 || replications < 1) {
        throw std::invalid_argument("sizes must be positive (and L >= 2)");
    }
    if (s < 0 || s > p) throw std::invalid_argument("s must lie in [0, p]");
    if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("t must lie in (0, 1]");
    if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
    if (jobs < 1) throw std::invalid_argument("jobs must be positive");
}

std::vector<int> level_counts(double t, int L, int n) {
    if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("t must lie in (0, 1]");
    if (L < 1 || n < L) throw std::invalid_argument("need n >= L >= 1");

    std::vector<double> share(static_cast<std::size_t>(L));
    double total = 0.0;
    double power = 1.0;
    for (int l = 0; l < L; ++l) {
        power *= t;
        share[static_cast<std::size_t>(l)] = power;
        total += power;
    }
    std::vector<int> counts(static_cast<std::size_t>(L));
    std::vector<std::pair<double, int>> remainder(static_cast<std::size_t>(L));
    int assigned = 0;
    for (int l = 0; l < L; ++l) {
        const double quota = static_cast<double>(n) * share[static_cast<std::size_t>(l)] / total;
        const int base = static_cast<int>(std::floor(quota));
        counts[static_cast<std::size_t>(l)] = base;
        remainder[static_cast<std::size_t>(l)] = {quota - base, l};
        assigned += base;
    }
    // Largest remainder, ties toward the smaller level index.
    std::sort(remainder.begin(), remainder.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (int k = 0; k < n - assigned; ++k) {
        counts[static_cast<std::size_t>(remainder[static_cast<std::size_t>(k)].second)] += 1;
    }
    for (int l = 0; l < L; ++l) {
        if (counts[static_cast<std::size_t>(l)] == 0) {
            throw std::invalid_argument("level " + std::to_string(l + 1) +
                                        " rounds to zero observations (t = " +
                                        std::to_string(t) + ", n = " +
                                        std::to_string(n) + ")");
        }
    }
    return counts;
}

std::vector<Eigen::VectorXd> gen_beta_star(int setting, int s, int p, int L,
                                           Rng& rng) {
    std::vector<Eigen::VectorXd> beta(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) {
        if (j >= s) {
            beta[static_cast<std::size_t>(j)] = Eigen::VectorXd::Zero(L);
            continue;
        }
        Eigen::VectorXd u(L);
        for (int l = 0; l < L; ++l) u[l] = rng.normal();
        if (setting == 1) {
            u.array() -= u.mean();
        } else {
            std::vector<int> keep = rng.distinct(std::min(3, L), L);
            Eigen::VectorXd sparse = Eigen::VectorXd::Zero(L);
            for (int idx : keep) sparse[idx] = u[idx];
            u = sparse;
        }
        beta[static_cast<std::size_t>(j)] = u / u.norm();
    }
    return beta;
}

namespace {

CategoricalVariable assign_levels(const std::vector<int>& counts, Rng& rng) {
    std::vector<int> pool;
    for (std::size_t l = 0; l < counts.size(); ++l) {
        pool.insert(pool.end(), static_cast<std::size_t>(counts[l]),
                    static_cast<int>(l) + 1);
    }
    rng.shuffle(pool);
    return CategoricalVariable(std::move(pool), static_cast<int>(counts.size()));
}

Eigen::VectorXd noiseless_response(const std::vector<CategoricalVariable>& vars,
                                   const std::vector<Eigen::VectorXd>& beta_star) {
    const int n = vars.front().n();
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (std::size_t j = 0; j < vars.size(); ++j) {
        for (int i = 0; i < n; ++i) {
            y[i] += beta_star[j][vars[j].observations[static_cast<std::size_t>(i)] - 1];
        }
    }
    return y;
}

}  // namespace

std::pair<Dataset, Dataset> gen_dataset(const SimulationConfig& cfg,
                                        const std::vector<int>& counts,
                                        const std::vector<Eigen::VectorXd>& beta_star,
                                        Rng& rng) {
    if (static_cast<int>(beta_star.size()) != cfg.p) {
        throw DimensionError("beta_star must contain one vector per variable");
    }
    std::vector<int> val_counts = level_counts(cfg.t, cfg.L, cfg.n_val);

    Dataset train;
    Dataset val;
    for (int j = 0; j < cfg.p; ++j) {
        train.variables.push_back(assign_levels(counts, rng));
    }
    for (int j = 0; j < cfg.p; ++j) {
        val.variables.push_back(assign_levels(val_counts, rng));
    }
    train.y = noiseless_response(train.variables, beta_star);
    for (int i = 0; i < cfg.n_train; ++i) train.y[i] += cfg.sigma * rng.normal();
    val.y = noiseless_response(val.variables, beta_star);
    for (int i = 0; i < cfg.n_val; ++i) val.y[i] += cfg.sigma * rng.normal();
    return {std::move(train), std::move(val)};
}

LambdaGrid lambda_grids(int n, int p, int L, double sigma) {
    if (n < 1 || p < 1 || L < 1) throw std::invalid_argument("sizes must be positive");
    LambdaGrid grid;
    const double base = sigma * (std::sqrt(static_cast<double>(L) / n) +
                                 std::sqrt(std::log(static_cast<double>(p)) / n));
    const double lasso_base =
        sigma * std::sqrt(std::log(static_cast<double>(p) * L) / n);
    const double root_n = std::sqrt(static_cast<double>(n));
    for (double kappa = -4.0; kappa <= 5.0 + 1e-9; kappa += 0.5) {
        const double factor = std::pow(2.0, kappa);
        grid.kappa.push_back(kappa);
        grid.without.push_back(factor * base);
        grid.with_.push_back(factor * base / root_n);
        grid.lasso_without.push_back(factor * lasso_base);
        grid.lasso_with.push_back(factor * lasso_base / root_n);
    }
    for (int k = 0; k <= 10; ++k) grid.tau.push_back(0.1 * k);
    return grid;
}

namespace {

struct MethodDef {
    std::string name;
    Variant variant;
    bool sparse = false;           // tau grid in play
    bool df_weights = false;       // sqrt(df) group weights
    const std::vector<double>* lambdas = nullptr;
    const std::vector<double>* lasso_lambdas = nullptr;  // null for setting 1
};

GroupedDesign design_for(const MethodDef& method,
                         const std::vector<CategoricalVariable>& vars) {
    switch (method.variant) {
        case Variant::group_only:
        case Variant::sgl_scaling:
        case Variant::sgl_svd_scaling:
            return standardized_design(vars);
        default:
            return centered_design(vars);
    }
}

double mspe(const GroupedDesign& design, const FitResult& fit, const Dataset& val) {
    Eigen::VectorXd yhat = predict_main_effects(design, fit, val.variables);
    return (yhat - val.y).squaredNorm() / static_cast<double>(val.y.size());
}

double estimation_error(const FitResult& fit,
                        const std::vector<Eigen::VectorXd>& beta_star) {
    double sq = 0.0;
    for (std::size_t j = 0; j < beta_star.size(); ++j) {
        sq += (fit.theta[j] - beta_star[j]).squaredNorm();
    }
    return std::sqrt(sq);
}

ReplicationResult fit_method_over_grid(const MethodDef& method,
                                       const LambdaGrid& grid,
                                       const Dataset& train, const Dataset& val,
                                       const std::vector<Eigen::VectorXd>& beta_star,
                                       const SolverConfig& solver_cfg,
                                       int replication) {
    GroupedDesign design = design_for(method, train.variables);

    ReplicationResult best;
    best.method = method.name;
    best.replication = replication;
    best.has_tau = method.sparse;
    best.val_mspe = std::numeric_limits<double>::infinity();

    std::vector<double> taus = method.sparse ? grid.tau : std::vector<double>{1.0};
    const std::size_t n_lambda = method.lambdas->size();

    for (double tau : taus) {
        FitResult warm;
        bool have_warm = false;
        // Largest lambda first so warm starts walk from sparse to dense.
        for (std::size_t k = n_lambda; k-- > 0;) {
            PenaltySpec penalty;
            penalty.variant = method.variant;
            penalty.lambda = (*method.lambdas)[k];
            if (method.sparse) {
                penalty.tau = tau;
                penalty.lambda_lasso = (*method.lasso_lambdas)[k];
            }
            if (method.df_weights) {
                penalty.block_weights.resize(design.blocks.size());
                for (std::size_t j = 0; j < design.blocks.size(); ++j) {
                    penalty.block_weights[j] = std::sqrt(design.blocks[j].df);
                }
            }
            FitResult fit =
                method.variant == Variant::group_only
                    ? fit_group_lasso(design, train.y, penalty, solver_cfg)
                    : fit_sparse_group_lasso(design, train.y, penalty, solver_cfg,
                                             have_warm ? &warm : nullptr);
            const double err = mspe(design, fit, val);
            if (err < best.val_mspe) {
                best.val_mspe = err;
                best.kappa = grid.kappa[k];
                best.tau = tau;
                best.est_error = estimation_error(fit, beta_star);
            }
            warm = std::move(fit);
            have_warm = true;
        }
    }
    return best;
}

std::vector<MethodDef> methods_for(const SimulationConfig& cfg,
                                   const LambdaGrid& grid) {
    std::vector<MethodDef> methods;
    if (cfg.setting == 1) {
        methods.push_back({"standardized", Variant::group_only, false, true,
                           &grid.with_, nullptr});
        methods.push_back({"centering_only", Variant::sgl_centering_only, false,
                           true, &grid.without, nullptr});
    } else {
        methods.push_back({"scaling", Variant::sgl_scaling, true, false,
                           &grid.with_, &grid.lasso_with});
        methods.push_back({"svd", Variant::sgl_svd, true, false, &grid.with_,
                           &grid.lasso_without});
        methods.push_back({"svd_scaling", Variant::sgl_svd_scaling, true, false,
                           &grid.with_, &grid.lasso_with});
        methods.push_back({"centering_only", Variant::sgl_centering_only, true,
                           false, &grid.without, &grid.lasso_without});
    }
    return methods;
}

}  // namespace

std::vector<ReplicationResult> run_setting(const SimulationConfig& cfg) {
    cfg.validate();
    const std::vector<int> counts = level_counts(cfg.t, cfg.L, cfg.n_train);
    const LambdaGrid grid = lambda_grids(cfg.n_train, cfg.p, cfg.L, cfg.sigma);
    const std::vector<MethodDef> methods = methods_for(cfg, grid);
    const Rng master(cfg.seed);

    std::vector<std::vector<ReplicationResult>> per_rep(
        static_cast<std::size_t>(cfg.replications));
    std::vector<std::pair<int, std::string>> failures;
    std::mutex failure_mutex;
    std::atomic<int> next{0};

    auto worker = [&]() {
        for (;;) {
            const int r = next.fetch_add(1);
            if (r >= cfg.replications) return;
            try {
                // One child stream per replication; all randomness for the
                // replication is drawn from it in a fixed order.
                Rng rng = master.child(static_cast<std::uint64_t>(r));
                std::vector<Eigen::VectorXd> beta_star =
                    gen_beta_star(cfg.setting, cfg.s, cfg.p, cfg.L, rng);
                auto [train, val] = gen_dataset(cfg, counts, beta_star, rng);
                std::vector<ReplicationResult> results;
                for (const MethodDef& method : methods) {
                    results.push_back(fit_method_over_grid(
                        method, grid, train, val, beta_star, cfg.solver, r));
                }
                per_rep[static_cast<std::size_t>(r)] = std::move(results);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                failures.emplace_back(r, e.what());
            }
        }
    };

    const int workers = std::min(cfg.jobs, cfg.replications);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }

    std::vector<ReplicationResult> merged;
    for (const auto& rep : per_rep) {
        merged.insert(merged.end(), rep.begin(), rep.end());
    }
    if (!failures.empty()) {
        std::sort(failures.begin(), failures.end());
        throw SimulationError("replication " + std::to_string(failures.front().first) +
                                  " failed: " + failures.front().second,
                              failures.front().first, std::move(merged));
    }
    return merged;
}

double quantile_type7(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile of empty vector");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    const double frac = h - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

std::vector<MethodSummary> summarize(const std::vector<ReplicationResult>& results) {
    if (results.empty()) throw std::invalid_argument("summarize needs results");
    std::vector<std::string> order;
    for (const ReplicationResult& r : results) {
        if (std::find(order.begin(), order.end(), r.method) == order.end()) {
            order.push_back(r.method);
        }
    }
    std::vector<MethodSummary> summaries;
    for (const std::string& method : order) {
        std::vector<double> errors;
        for (const ReplicationResult& r : results) {
            if (r.method == method) errors.push_back(r.est_error);
        }
        MethodSummary s;
        s.method = method;
        s.count = static_cast<int>(errors.size());
        s.min = quantile_type7(errors, 0.0);
        s.q1 = quantile_type7(errors, 0.25);
        s.median = quantile_type7(errors, 0.5);
        s.q3 = quantile_type7(errors, 0.75);
        s.max = quantile_type7(errors, 1.0);
        summaries.push_back(std::move(s));
    }
    return summaries;
}

}  // namespace catlasso
