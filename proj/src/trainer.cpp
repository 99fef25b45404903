#include "stiffnet/trainer.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>

namespace stiffnet {

std::pair<ResNetParams, TrainHistory> trainNetwork(
    const Matrix& train_inputs, const Matrix& train_targets,
    const Matrix& val_inputs, const Matrix& val_targets,
    const NetworkTrainOptions& options) {
  if (train_inputs.cols() == 0 || val_inputs.cols() == 0)
    throw std::invalid_argument("trainNetwork: training and validation sets must be nonempty");

  const auto& widths = options.net_widths;
  const double tau =
      options.tau > 0.0 ? options.tau : defaultTau(static_cast<Index>(widths.size()) - 1);
  ResNetParams net = randomInit(widths, tau, options.epsilon, options.seed);

  LossConfig loss_config;
  loss_config.lambda = options.lambda;
  loss_config.use_l1 = options.use_l1;

  Objective objective = [&](const Vector& theta) {
    net.unflatten(theta);
    LossGrad lg = lossAndGradient(net, train_inputs, train_targets, loss_config);
    return Evaluation{lg.value, std::move(lg.gradient)};
  };

  TrainHistory history;
  EarlyStopping stopping(options.patience);
  Vector best_theta = net.flatten();
  IterationCallback callback = [&](int, const Vector& theta, double, const Vector&) {
    net.unflatten(theta);
    const double val = dataLoss(net, val_inputs, val_targets);
    history.val_loss.push_back(val);
    const bool keep_going = stopping.observe(val);
    if (stopping.bestIndex() == stopping.observations() - 1) best_theta = theta;
    return keep_going;
  };

  BfgsConfig bfgs_config;
  bfgs_config.max_iters = options.max_iters;
  bfgs_config.grad_tol = options.grad_tol;
  bfgs_config.armijo = options.armijo;
  bfgs_config.full_memory_threshold = options.full_memory_threshold;

  auto [theta_final, bfgs_history] =
      bfgsMinimize(objective, net.flatten(), bfgs_config, callback);
  (void)theta_final;

  history.train_loss = bfgs_history.objective;
  history.step_length = bfgs_history.step_length;
  history.grad_norm = bfgs_history.grad_norm;
  history.best_index = stopping.bestIndex();
  switch (bfgs_history.stop_reason) {
    case BfgsStop::CallbackStop: history.stop_reason = StopCause::Patience; break;
    case BfgsStop::MaxIters: history.stop_reason = StopCause::MaxIters; break;
    case BfgsStop::GradientTolerance: history.stop_reason = StopCause::GradientTolerance; break;
    case BfgsStop::LineSearchFloor: history.stop_reason = StopCause::LineSearchFloor; break;
  }

  net.unflatten(best_theta);
  return {net, history};
}

int resolveThreads(int configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("STIFFNET_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

std::pair<ParallelSurrogate, std::vector<TrainHistory>> trainParallel(
    const Dataset& train, const Dataset& validation, const TrainConfig& config,
    const std::vector<std::string>& channel_names) {
  const Index n_channels = train.targets.cols();
  if (n_channels == 0) throw std::invalid_argument("trainParallel: no target channels");
  if (validation.targets.cols() != n_channels)
    throw std::invalid_argument("trainParallel: validation channel count mismatch");
  if (!config.depths.empty() && static_cast<Index>(config.depths.size()) != n_channels)
    throw std::invalid_argument("trainParallel: per-channel depth list length mismatch");
  if (!config.widths.empty() && static_cast<Index>(config.widths.size()) != n_channels)
    throw std::invalid_argument("trainParallel: per-channel width list length mismatch");

  const Matrix x_train = train.scaledInputs().transpose();
  const Matrix t_train = train.scaledTargets().transpose();
  const Matrix x_val = validation.scaledInputs().transpose();
  const Matrix t_val = validation.scaledTargets().transpose();
  const Index n_inputs = x_train.rows();

  std::vector<ResNetParams> nets(n_channels);
  std::vector<TrainHistory> histories(n_channels);
  std::vector<std::string> errors(n_channels);

  auto train_channel = [&](Index c) {
    Index depth = config.depths.empty() ? config.depth : config.depths[c];
    if (config.depth_counts_hidden) depth += 1;
    const Index width = config.widths.empty() ? config.width : config.widths[c];
    if (depth < 2) throw std::invalid_argument("trainParallel: depth must give L >= 2");

    NetworkTrainOptions opt;
    opt.net_widths.assign(static_cast<std::size_t>(depth) + 1, width);
    opt.net_widths.front() = n_inputs;
    opt.net_widths.back() = 1;
    opt.tau = config.tau;
    opt.epsilon = config.epsilon;
    opt.lambda = config.lambda;
    opt.use_l1 = config.use_l1;
    opt.patience = config.patience;
    opt.max_iters = config.max_iters;
    opt.armijo = config.armijo;
    opt.seed = config.init_seed + static_cast<std::uint64_t>(c);
    opt.grad_tol = config.grad_tol;
    opt.full_memory_threshold = config.full_memory_threshold;

    auto [net, hist] = trainNetwork(x_train, t_train.row(c), x_val, t_val.row(c), opt);
    nets[c] = std::move(net);
    histories[c] = std::move(hist);
  };

  const int workers = std::min<int>(resolveThreads(config.threads), static_cast<int>(n_channels));
  std::atomic<Index> next{0};
  auto worker = [&]() {
    for (;;) {
      const Index c = next.fetch_add(1);
      if (c >= n_channels) return;
      try {
        train_channel(c);
      } catch (const std::exception& e) {
        errors[c] = e.what();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::string failed;
  for (Index c = 0; c < n_channels; ++c)
    if (!errors[c].empty())
      failed += (failed.empty() ? "" : "; ") + std::string("channel ") +
                std::to_string(c) + ": " + errors[c];
  if (!failed.empty()) throw std::runtime_error("trainParallel: " + failed);

  ParallelSurrogate surrogate;
  surrogate.nets = std::move(nets);
  surrogate.input_scalers = train.input_scalers;
  surrogate.target_scalers = train.target_scalers;
  surrogate.approach = train.approach;
  surrogate.dt = train.dt;
  surrogate.channel_names = channel_names;
  return {std::move(surrogate), std::move(histories)};
}

}  // namespace stiffnet
