#include "stiffnet/bfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace stiffnet {

namespace {

struct LbfgsMemory {
  std::deque<Vector> s, y;
  std::deque<double> rho;
  double gamma = 1.0;
  int capacity = 20;

  void push(const Vector& si, const Vector& yi) {
    const double sy = si.dot(yi);
    s.push_back(si);
    y.push_back(yi);
    rho.push_back(1.0 / sy);
    gamma = sy / yi.squaredNorm();
    if (static_cast<int>(s.size()) > capacity) {
      s.pop_front();
      y.pop_front();
      rho.pop_front();
    }
  }

  void clear() {
    s.clear();
    y.clear();
    rho.clear();
    gamma = 1.0;
  }

  // Two-loop recursion for H g.
  Vector apply(const Vector& g) const {
    Vector q = g;
    const int m = static_cast<int>(s.size());
    std::vector<double> alpha(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = rho[i] * s[i].dot(q);
      q -= alpha[i] * y[i];
    }
    q *= gamma;
    for (int i = 0; i < m; ++i) {
      const double beta = rho[i] * y[i].dot(q);
      q += (alpha[i] - beta) * s[i];
    }
    return q;
  }
};

}  // namespace

std::pair<Vector, BfgsHistory> bfgsMinimize(const Objective& objective, const Vector& x0,
                                            const BfgsConfig& config,
                                            const IterationCallback& callback) {
  const Index n = x0.size();
  const bool dense = n <= config.full_memory_threshold;

  Vector x = x0;
  Evaluation cur = objective(x);
  if (!std::isfinite(cur.value) || !cur.gradient.allFinite())
    throw OptimizationError("bfgsMinimize: objective not finite at the initial point");

  BfgsHistory history;
  auto record = [&](double step) {
    history.objective.push_back(cur.value);
    history.step_length.push_back(step);
    history.grad_norm.push_back(cur.gradient.norm());
  };
  record(0.0);
  if (callback && !callback(0, x, cur.value, cur.gradient)) {
    history.stop_reason = BfgsStop::CallbackStop;
    return {x, history};
  }
  if (cur.gradient.norm() <= config.grad_tol) {
    history.stop_reason = BfgsStop::GradientTolerance;
    return {x, history};
  }

  Matrix h_inv;
  if (dense) h_inv = Matrix::Identity(n, n);
  LbfgsMemory memory;
  memory.capacity = config.lbfgs_pairs;
  bool scale_pending = true;  // rescale H from the first curvature pair

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    Vector direction = dense ? Vector(-(h_inv * cur.gradient)) : Vector(-memory.apply(cur.gradient));
    double slope = direction.dot(cur.gradient);
    if (!(slope < 0.0)) {
      // Stale curvature: restart from steepest descent.
      direction = -cur.gradient;
      slope = -cur.gradient.squaredNorm();
      if (dense) h_inv.setIdentity();
      memory.clear();
      scale_pending = true;
    }

    // Armijo backtracking from unit step.
    double step = 1.0;
    Evaluation trial;
    bool accepted = false;
    bool any_finite = false;
    for (int bt = 0; bt <= config.armijo.max_backtracks; ++bt) {
      trial = objective(x + step * direction);
      const bool finite = std::isfinite(trial.value) && trial.gradient.allFinite();
      any_finite = any_finite || finite;
      if (finite && trial.value <= cur.value + config.armijo.c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= config.armijo.backtrack;
    }
    if (!accepted) {
      if (!any_finite)
        throw OptimizationError("bfgsMinimize: objective persistently non-finite in line search");
      history.stop_reason = BfgsStop::LineSearchFloor;
      return {x, history};
    }

    const Vector s = step * direction;
    const Vector y = trial.gradient - cur.gradient;
    x += s;
    cur = trial;
    record(step);

    if (callback && !callback(iter, x, cur.value, cur.gradient)) {
      history.stop_reason = BfgsStop::CallbackStop;
      return {x, history};
    }
    if (cur.gradient.norm() <= config.grad_tol) {
      history.stop_reason = BfgsStop::GradientTolerance;
      return {x, history};
    }

    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      if (dense) {
        if (scale_pending) {
          h_inv = (sy / y.squaredNorm()) * Matrix::Identity(n, n);
          scale_pending = false;
        }
        const double rho = 1.0 / sy;
        const Vector hy = h_inv * y;
        const double yhy = y.dot(hy);
        h_inv.noalias() -= rho * (s * hy.transpose() + hy * s.transpose());
        h_inv.noalias() += (rho * rho * yhy + rho) * (s * s.transpose());
      } else {
        memory.push(s, y);
      }
    }
  }
  history.stop_reason = BfgsStop::MaxIters;
  return {x, history};
}

}  // namespace stiffnet
