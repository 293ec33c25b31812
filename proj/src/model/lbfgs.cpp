#include "loanfair/lbfgs.hpp"

#include <cmath>
#include <deque>

namespace loanfair {

namespace {

struct Correction {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

// Two-loop recursion: returns H * g for the implicit inverse Hessian H.
Eigen::VectorXd apply_inverse_hessian(const std::deque<Correction>& memory, const Eigen::VectorXd& g) {
  Eigen::VectorXd q = g;
  std::vector<double> alpha(memory.size());
  for (std::size_t i = memory.size(); i-- > 0;) {
    alpha[i] = memory[i].rho * memory[i].s.dot(q);
    q -= alpha[i] * memory[i].y;
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const double beta = memory[i].rho * memory[i].y.dot(q);
    q += (alpha[i] - beta) * memory[i].s;
  }
  return q;
}

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& objective, Eigen::VectorXd x0, const LbfgsOptions& options) {
  constexpr double kArmijo = 1e-4;
  constexpr double kShrink = 0.5;
  constexpr int kMaxBacktracks = 60;

  LbfgsResult result;
  result.x = std::move(x0);
  Eigen::VectorXd grad(result.x.size());
  result.value = objective(result.x, grad);
  result.gradient_norm = grad.norm();
  result.trace.push_back(result.value);

  std::deque<Correction> memory;
  Eigen::VectorXd candidate(result.x.size());
  Eigen::VectorXd candidate_grad(result.x.size());

  while (result.gradient_norm > options.gradient_tolerance) {
    if (result.iterations >= options.max_iterations) return result;

    Eigen::VectorXd direction = -apply_inverse_hessian(memory, grad);
    double slope = grad.dot(direction);
    if (!(slope < 0.0)) {
      // Lost descent; restart from steepest descent.
      memory.clear();
      direction = -grad;
      slope = -grad.squaredNorm();
    }
    double step = memory.empty() ? std::min(1.0, 1.0 / result.gradient_norm) : 1.0;

    double candidate_value = 0.0;
    bool accepted = false;
    for (int k = 0; k < kMaxBacktracks; ++k) {
      candidate = result.x + step * direction;
      candidate_value = objective(candidate, candidate_grad);
      if (std::isfinite(candidate_value) && candidate_value <= result.value + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= kShrink;
    }
    if (!accepted || !(candidate_value <= result.value)) return result;

    Correction c{candidate - result.x, candidate_grad - grad, 0.0};
    const double curvature = c.s.dot(c.y);
    if (curvature > 1e-12 * c.y.squaredNorm()) {
      c.rho = 1.0 / curvature;
      memory.push_back(std::move(c));
      if (static_cast<int>(memory.size()) > options.history) memory.pop_front();
    }

    result.x.swap(candidate);
    grad.swap(candidate_grad);
    result.value = candidate_value;
    result.gradient_norm = grad.norm();
    result.trace.push_back(result.value);
    ++result.iterations;
  }
  result.converged = true;
  return result;
}

}  // namespace loanfair
