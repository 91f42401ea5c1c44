#include "catlasso/prox.hpp"

#include <algorithm>
#include <cmath>

namespace catlasso {

double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& g, double t) {
    Eigen::VectorXd out(g.size());
    for (int i = 0; i < g.size(); ++i) out[i] = soft_threshold(g[i], t);
    return out;
}

Eigen::VectorXd group_soft_threshold(const Eigen::VectorXd& g, double t) {
    const double norm = g.norm();
    if (norm <= t || norm == 0.0) return Eigen::VectorXd::Zero(g.size());
    return g * (1.0 - t / norm);
}

Eigen::VectorXd sparse_group_prox(const Eigen::VectorXd& g, double t1, double t2) {
    return group_soft_threshold(soft_threshold(g, t1), t2);
}

}  // namespace catlasso
