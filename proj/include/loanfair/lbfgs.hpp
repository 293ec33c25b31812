#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace loanfair {

struct LbfgsOptions {
  int history = 10;
  int max_iterations = 500;
  /// Stop once the Euclidean norm of the gradient falls to this value.
  double gradient_tolerance = 1e-6;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective value at the start and after every accepted step.
  std::vector<double> trace;
};

/// Returns f(x) and writes the gradient into `grad` (already sized).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Limited-memory BFGS with an Armijo backtracking line search. Every
/// accepted step strictly decreases the objective, so `trace` is
/// non-increasing.
LbfgsResult minimize_lbfgs(const Objective& objective, Eigen::VectorXd x0, const LbfgsOptions& options = {});

}  // namespace loanfair
