#include "hiprobe/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace hiprobe::optim {

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::gradient_tolerance:
      return "gradient_tolerance";
    case StopReason::max_iterations:
      return "max_iterations";
    case StopReason::line_search_failed:
      return "line_search_failed";
  }
  return "unknown";
}

namespace {

struct Probe {
  double alpha = 0.0;
  double value = 0.0;
  double slope = 0.0;  // directional derivative along the search direction
};

// Minimizer of the cubic through two (alpha, value, slope) points, or NaN.
double cubic_minimizer(const Probe& a, const Probe& b) {
  const double d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.slope * b.slope;
  if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
  return b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
}

class LineSearch {
 public:
  LineSearch(const Objective& objective, const Eigen::VectorXd& x, const Eigen::VectorXd& direction,
             const LbfgsOptions& options, double value0, double slope0)
      : objective_(objective), x_(x), direction_(direction), options_(options),
        origin_{0.0, value0, slope0}, trial_x_(x.size()), trial_grad_(x.size()) {}

  // Returns true with the accepted point stored in best_*.
  bool run(double initial_step) {
    Probe prev = origin_;
    double alpha = initial_step;
    for (int i = 0; i < options_.max_line_search_evaluations; ++i) {
      const Probe cur = evaluate(alpha);
      if (!std::isfinite(cur.value) || cur.value > armijo_bound(cur.alpha) ||
          (i > 0 && cur.value >= prev.value)) {
        return zoom(prev, cur);
      }
      if (std::abs(cur.slope) <= -options_.curvature * origin_.slope) return accept(cur);
      if (cur.slope >= 0.0) return zoom(cur, prev);
      prev = cur;
      alpha *= 2.0;
    }
    return has_decrease_;
  }

  const Eigen::VectorXd& best_x() const { return best_x_; }
  const Eigen::VectorXd& best_grad() const { return best_grad_; }
  double best_value() const { return best_value_; }

 private:
  double armijo_bound(double alpha) const {
    return origin_.value + options_.armijo * alpha * origin_.slope;
  }

  Probe evaluate(double alpha) {
    ++evaluations_;
    trial_x_ = x_ + alpha * direction_;
    const double value = objective_(trial_x_, trial_grad_);
    Probe p{alpha, value, trial_grad_.dot(direction_)};
    if (std::isfinite(value) && value <= armijo_bound(alpha) && value < origin_.value &&
        (!has_decrease_ || value < best_value_)) {
      has_decrease_ = true;
      best_value_ = value;
      best_x_ = trial_x_;
      best_grad_ = trial_grad_;
    }
    return p;
  }

  // `p` must be the most recent evaluation.
  bool accept(const Probe& p) {
    best_value_ = p.value;
    best_x_ = trial_x_;
    best_grad_ = trial_grad_;
    has_decrease_ = true;
    return true;
  }

  bool zoom(Probe lo, Probe hi) {
    while (evaluations_ < options_.max_line_search_evaluations) {
      const double left = std::min(lo.alpha, hi.alpha);
      const double right = std::max(lo.alpha, hi.alpha);
      const double width = right - left;
      if (width <= std::numeric_limits<double>::epsilon() * std::max(1.0, right)) break;

      double alpha = std::isfinite(hi.value) ? cubic_minimizer(lo, hi)
                                             : std::numeric_limits<double>::quiet_NaN();
      if (!std::isfinite(alpha) || alpha < left + 0.1 * width || alpha > right - 0.1 * width) {
        alpha = 0.5 * (left + right);
      }
      const Probe cur = evaluate(alpha);
      if (!std::isfinite(cur.value) || cur.value > armijo_bound(cur.alpha) ||
          cur.value >= lo.value) {
        hi = cur;
        continue;
      }
      if (std::abs(cur.slope) <= -options_.curvature * origin_.slope) return accept(cur);
      if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = cur;
    }
    return has_decrease_;
  }

  const Objective& objective_;
  const Eigen::VectorXd& x_;
  const Eigen::VectorXd& direction_;
  const LbfgsOptions& options_;
  Probe origin_;
  Eigen::VectorXd trial_x_;
  Eigen::VectorXd trial_grad_;
  Eigen::VectorXd best_x_;
  Eigen::VectorXd best_grad_;
  double best_value_ = 0.0;
  bool has_decrease_ = false;
  int evaluations_ = 0;
};

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& objective, Eigen::VectorXd x0,
                           const LbfgsOptions& options) {
  LbfgsResult result;
  result.x = std::move(x0);
  Eigen::VectorXd grad(result.x.size());
  result.value = objective(result.x, grad);
  result.value_history.push_back(result.value);
  result.gradient_norm = grad.norm();

  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  std::deque<double> rho_hist;
  std::vector<double> alpha_buf(static_cast<std::size_t>(std::max(options.history_size, 1)));
  Eigen::VectorXd direction(result.x.size());

  while (true) {
    if (result.gradient_norm <= options.gradient_tolerance) {
      result.reason = StopReason::gradient_tolerance;
      break;
    }
    if (result.iterations >= options.max_iterations) {
      result.reason = StopReason::max_iterations;
      break;
    }

    // Two-loop recursion: direction = -H * grad.
    direction = -grad;
    const std::size_t m = s_hist.size();
    for (std::size_t k = m; k-- > 0;) {
      alpha_buf[k] = rho_hist[k] * s_hist[k].dot(direction);
      direction -= alpha_buf[k] * y_hist[k];
    }
    double initial_step = 1.0;
    if (m > 0) {
      direction *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    } else {
      initial_step = std::min(1.0, 1.0 / result.gradient_norm);
    }
    for (std::size_t k = 0; k < m; ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(direction);
      direction += (alpha_buf[k] - beta) * s_hist[k];
    }

    double slope = grad.dot(direction);
    if (!(slope < 0.0)) {
      // Lost descent; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      direction = -grad;
      slope = -grad.squaredNorm();
      initial_step = std::min(1.0, 1.0 / result.gradient_norm);
    }

    LineSearch search(objective, result.x, direction, options, result.value, slope);
    if (!search.run(initial_step)) {
      result.reason = StopReason::line_search_failed;
      break;
    }

    Eigen::VectorXd s = search.best_x() - result.x;
    Eigen::VectorXd y = search.best_grad() - grad;
    result.x = search.best_x();
    grad = search.best_grad();
    result.value = search.best_value();
    result.gradient_norm = grad.norm();
    result.value_history.push_back(result.value);
    ++result.iterations;

    const double sy = s.dot(y);
    if (sy > 1e-12 * std::sqrt(s.squaredNorm() * y.squaredNorm())) {
      if (static_cast<int>(s_hist.size()) >= std::max(options.history_size, 1)) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      rho_hist.push_back(1.0 / sy);
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
    }
  }
  return result;
}

}  // namespace hiprobe::optim
