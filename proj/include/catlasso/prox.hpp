#pragma once

#include <Eigen/Dense>

namespace catlasso {

/// Scalar soft threshold: sign(x) * max(|x| - t, 0).
double soft_threshold(double x, double t);

/// Coordinate-wise soft threshold.
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& g, double t);

/// Proximal map of t ||.||_2: (1 - t / ||g||_2)_+ g, zero when ||g|| <= t.
Eigen::VectorXd group_soft_threshold(const Eigen::VectorXd& g, double t);

/**
 * Proximal map of t1 ||.||_1 + t2 ||.||_2: coordinate-wise soft threshold by
 * t1 followed by group soft threshold by t2. Minimizes
 * 0.5 ||x - g||^2 + t1 ||x||_1 + t2 ||x||_2.
 */
Eigen::VectorXd sparse_group_prox(const Eigen::VectorXd& g, double t1, double t2);

}  // namespace catlasso
