#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace hiprobe::optim {

struct LbfgsOptions {
  int max_iterations = 1000;
  double gradient_tolerance = 1e-6;
  int history_size = 10;
  int max_line_search_evaluations = 40;
  double armijo = 1e-4;     // sufficient-decrease constant c1
  double curvature = 0.9;   // strong Wolfe constant c2
};

enum class StopReason { gradient_tolerance, max_iterations, line_search_failed };

const char* to_string(StopReason reason);

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  StopReason reason = StopReason::max_iterations;
  std::vector<double> value_history;  // initial value, then one entry per accepted step
};

/// Returns f(x) and writes the gradient into `grad` (already sized like x).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Limited-memory BFGS with a strong-Wolfe line search. Deterministic; every
/// accepted step strictly decreases the objective.
LbfgsResult minimize_lbfgs(const Objective& objective, Eigen::VectorXd x0,
                           const LbfgsOptions& options = {});

}  // namespace hiprobe::optim
