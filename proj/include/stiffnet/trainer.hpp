#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "stiffnet/bfgs.hpp"
#include "stiffnet/dataset.hpp"
#include "stiffnet/resnet.hpp"
#include "stiffnet/types.hpp"

namespace stiffnet {

struct TrainConfig {
  Index depth = 4;  // recursion layer count L
  Index width = 10;
  // Optional per-output-channel overrides; empty means uniform.
  std::vector<Index> depths;
  std::vector<Index> widths;
  // When set, `depth` counts hidden layers (L-1) instead of L.
  bool depth_counts_hidden = false;

  double lambda = 1e-7;
  bool use_l1 = true;
  Index patience = 250;
  int max_iters = 2000;
  ArmijoConfig armijo;
  std::uint64_t init_seed = 1;
  double tau = 0.0;  // <= 0 selects 2/(L-1)
  double epsilon = 0.1;
  double grad_tol = 1e-10;
  Index full_memory_threshold = 200000;
  int threads = 0;  // 0: STIFFNET_THREADS, else hardware concurrency
};

enum class StopCause { Patience, MaxIters, GradientTolerance, LineSearchFloor };

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> step_length;
  std::vector<double> grad_norm;
  StopCause stop_reason = StopCause::MaxIters;
  Index best_index = 0;  // iterate with minimum validation loss
};

// Validation-patience bookkeeping: counts iterations since the last new
// validation minimum; the counter resets to zero on each new minimum.
class EarlyStopping {
 public:
  explicit EarlyStopping(Index patience) : patience_(patience) {}

  // Returns true while training should continue.
  bool observe(double val_loss) {
    const Index index = seen_++;
    if (val_loss < best_value_) {
      best_value_ = val_loss;
      best_index_ = index;
      counter_ = 0;
      return true;
    }
    ++counter_;
    return counter_ < std::max<Index>(patience_, 1);
  }

  Index bestIndex() const { return best_index_; }
  double bestValue() const { return best_value_; }
  Index observations() const { return seen_; }

 private:
  Index patience_;
  Index counter_ = 0;
  Index seen_ = 0;
  Index best_index_ = -1;
  double best_value_ = std::numeric_limits<double>::infinity();
};

struct NetworkTrainOptions {
  std::vector<Index> net_widths;  // n_0 .. n_L
  double tau = 0.0;               // <= 0 selects 2/(L-1)
  double epsilon = 0.1;
  double lambda = 1e-7;
  bool use_l1 = true;
  Index patience = 250;
  int max_iters = 2000;
  ArmijoConfig armijo;
  std::uint64_t seed = 1;
  double grad_tol = 1e-10;
  Index full_memory_threshold = 200000;
};

// Trains one network on column-per-sample data, evaluating the validation
// MSE (no regularization) at the initial point and after every accepted
// BFGS step. Returns the iterate with minimum validation loss.
std::pair<ResNetParams, TrainHistory> trainNetwork(
    const Matrix& train_inputs, const Matrix& train_targets,
    const Matrix& val_inputs, const Matrix& val_targets,
    const NetworkTrainOptions& options);

// Trains the M+1 parallel single-output networks, one per target channel,
// seeded init_seed + channel so results are independent of scheduling.
std::pair<ParallelSurrogate, std::vector<TrainHistory>> trainParallel(
    const Dataset& train, const Dataset& validation, const TrainConfig& config,
    const std::vector<std::string>& channel_names = {});

// Worker-count resolution: config value, else STIFFNET_THREADS, else
// hardware concurrency.
int resolveThreads(int configured);

}  // namespace stiffnet
