#pragma once

#include <functional>
#include <vector>

#include "stiffnet/types.hpp"

namespace stiffnet {

struct ArmijoConfig {
  double c1 = 1e-4;        // sufficient-decrease constant
  double backtrack = 0.5;  // step shrink factor
  int max_backtracks = 40;
};

struct BfgsConfig {
  int max_iters = 1000;
  double grad_tol = 1e-10;
  ArmijoConfig armijo;
  // Dense inverse-Hessian updates up to this many parameters; a limited
  // memory variant with lbfgs_pairs pairs engages above it.
  Index full_memory_threshold = 200000;
  int lbfgs_pairs = 20;
};

enum class BfgsStop { GradientTolerance, MaxIters, CallbackStop, LineSearchFloor };

struct BfgsHistory {
  // Entry 0 is the initial point (step_length 0); entry k the k-th accepted
  // iterate.
  std::vector<double> objective;
  std::vector<double> step_length;
  std::vector<double> grad_norm;
  BfgsStop stop_reason = BfgsStop::MaxIters;
};

struct Evaluation {
  double value = 0.0;
  Vector gradient;
};

using Objective = std::function<Evaluation(const Vector&)>;
// Called at the initial point and after every accepted step; returning false
// stops the optimization.
using IterationCallback =
    std::function<bool(int iter, const Vector& x, double value, const Vector& gradient)>;

class OptimizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// BFGS with Armijo backtracking from unit step. Non-descent directions are
// replaced by the negative gradient (with a curvature reset); updates with
// s'y <= 1e-10 |s||y| are skipped.
std::pair<Vector, BfgsHistory> bfgsMinimize(const Objective& objective, const Vector& x0,
                                            const BfgsConfig& config,
                                            const IterationCallback& callback = {});

}  // namespace stiffnet
