#include "stiffnet/rollout.hpp"

#include <cmath>
#include <stdexcept>

namespace stiffnet {

namespace {

enum class MarchKind { Derivative, Solution };

MarchResult marchCore(const StateMap& map, MarchKind kind, const State& u0, double dt,
                      Index n_steps, bool conserve_mass) {
  if (n_steps < 1) throw std::invalid_argument("march: need at least one step");
  if (dt <= 0.0) throw std::invalid_argument("march: dt must be positive");

  MarchResult result;
  result.trajectory.sample_dt = dt;
  result.trajectory.t0 = u0.temperature;
  result.trajectory.states.reserve(n_steps + 1);
  result.trajectory.states.push_back(u0);

  State current = u0;
  for (Index n = 1; n <= n_steps; ++n) {
    const Vector u = current.toVector();
    Vector u_next;
    if (kind == MarchKind::Derivative) {
      u_next = u + dt * map(u, dt);
    } else {
      u_next = map(u, dt);
    }
    if (!u_next.allFinite())
      throw std::runtime_error("march: non-finite state at step " + std::to_string(n));

    State next = State::fromVector(u_next, u0.time + static_cast<double>(n) * dt);
    for (Index k = 0; k < next.densities.size(); ++k)
      if (next.densities[k] < 0.0) {
        next.densities[k] = 0.0;
        ++result.clip_count;
      }
    if (conserve_mass) next = enforceMass(current, next);
    result.trajectory.states.push_back(next);
    current = std::move(next);
  }
  return result;
}

StateMap surrogateMap(const ParallelSurrogate& surrogate) {
  return [&surrogate](const Vector& u, double dt) { return surrogate.evaluate(u, dt); };
}

}  // namespace

MarchResult marchDerivativeMap(const StateMap& derivative, const State& u0, double dt,
                               Index n_steps, bool conserve_mass) {
  return marchCore(derivative, MarchKind::Derivative, u0, dt, n_steps, conserve_mass);
}

MarchResult marchSolutionMap(const StateMap& next_state, const State& u0, double dt,
                             Index n_steps, bool conserve_mass) {
  return marchCore(next_state, MarchKind::Solution, u0, dt, n_steps, conserve_mass);
}

MarchResult marchDerivative(const ParallelSurrogate& surrogate, const State& u0,
                            double dt, Index n_steps, bool conserve_mass) {
  if (surrogate.approach != Approach::Derivative)
    throw std::invalid_argument("marchDerivative: surrogate trained for the solution approach");
  return marchDerivativeMap(surrogateMap(surrogate), u0, dt, n_steps, conserve_mass);
}

MarchResult marchSolution(const ParallelSurrogate& surrogate, const State& u0,
                          Index n_steps, bool conserve_mass) {
  if (surrogate.approach != Approach::Solution)
    throw std::invalid_argument("marchSolution: surrogate trained for the derivative approach");
  return marchSolutionMap(surrogateMap(surrogate), u0, surrogate.dt, n_steps, conserve_mass);
}

std::vector<State> singleStepPredictions(const ParallelSurrogate& surrogate,
                                         const Trajectory& reference) {
  if (reference.size() < 2)
    throw std::invalid_argument("singleStepPredictions: reference needs at least 2 states");
  const double dt = reference.sample_dt;
  if (std::abs(dt - surrogate.dt) > 1e-12 * std::max(dt, surrogate.dt))
    throw std::invalid_argument("singleStepPredictions: reference dt differs from training dt");

  std::vector<State> predictions;
  predictions.reserve(reference.size() - 1);
  for (Index n = 0; n + 1 < reference.size(); ++n) {
    const Vector u = reference.states[n].toVector();
    const Vector out = surrogate.evaluate(u, dt);
    const Vector u_next = surrogate.approach == Approach::Derivative ? Vector(u + dt * out) : out;
    predictions.push_back(State::fromVector(u_next, reference.states[n + 1].time));
  }
  return predictions;
}

State enforceMass(const State& prev_state, const State& raw_state) {
  const double raw_sum = raw_state.densities.sum();
  if (!(raw_sum > 0.0))
    throw std::runtime_error("enforceMass: non-positive species sum");
  State adjusted = raw_state;
  adjusted.densities *= prev_state.densities.sum() / raw_sum;
  return adjusted;
}

double ignitionDelay(const Trajectory& traj) {
  if (traj.size() < 3) return std::numeric_limits<double>::quiet_NaN();
  const double t_begin = traj.states.front().time;
  double best_rate = -std::numeric_limits<double>::infinity();
  double best_time = t_begin;
  for (Index n = 1; n + 1 < traj.size(); ++n) {
    const double rate = (traj.states[n + 1].temperature - traj.states[n - 1].temperature) /
                        (2.0 * traj.sample_dt);
    if (rate > best_rate) {
      best_rate = rate;
      best_time = traj.states[n].time;
    }
  }
  return best_time - t_begin;
}

TrajectoryMetrics trajectoryError(const Trajectory& predicted, const Trajectory& reference) {
  if (predicted.size() != reference.size())
    throw std::invalid_argument("trajectoryError: sample counts differ");
  if (std::abs(predicted.sample_dt - reference.sample_dt) >
      1e-12 * std::max(predicted.sample_dt, reference.sample_dt))
    throw std::invalid_argument("trajectoryError: sample grids differ");

  const Index n = reference.size();
  const Index channels = reference.states.front().densities.size() + 1;
  TrajectoryMetrics metrics;
  metrics.channel_rel_l2 = Vector::Zero(channels);
  for (Index c = 0; c < channels; ++c) {
    double diff2 = 0.0, ref2 = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double p = c == 0 ? predicted.states[i].temperature
                              : predicted.states[i].densities[c - 1];
      const double r = c == 0 ? reference.states[i].temperature
                              : reference.states[i].densities[c - 1];
      diff2 += (p - r) * (p - r);
      ref2 += r * r;
    }
    metrics.channel_rel_l2[c] =
        ref2 > 0.0 ? std::sqrt(diff2 / ref2) : std::sqrt(diff2);
  }
  metrics.ignition_delay_pred = ignitionDelay(predicted);
  metrics.ignition_delay_ref = ignitionDelay(reference);
  metrics.ignition_delay_rel_error =
      std::abs(metrics.ignition_delay_pred - metrics.ignition_delay_ref) /
      std::max(metrics.ignition_delay_ref, std::numeric_limits<double>::min());
  return metrics;
}

RolloutResult evaluateRollout(const ParallelSurrogate& surrogate,
                              const Trajectory& reference, bool conserve_mass) {
  if (reference.size() < 2)
    throw std::invalid_argument("evaluateRollout: reference needs at least 2 states");

  const Index n_steps = reference.size() - 1;
  MarchResult march =
      surrogate.approach == Approach::Derivative
          ? marchDerivative(surrogate, reference.states.front(), reference.sample_dt,
                            n_steps, conserve_mass)
          : marchSolution(surrogate, reference.states.front(), n_steps, conserve_mass);
  march.trajectory.phi = reference.phi;
  march.trajectory.t0 = reference.t0;
  march.trajectory.mechanism_id = reference.mechanism_id;

  RolloutResult result;
  result.metrics = trajectoryError(march.trajectory, reference);
  result.clip_count = march.clip_count;

  const auto one_step = singleStepPredictions(surrogate, reference);
  result.single_step_rel_error = Vector::Zero(static_cast<Index>(one_step.size()));
  for (std::size_t k = 0; k < one_step.size(); ++k) {
    const Vector truth = reference.states[k + 1].toVector();
    const Vector pred = one_step[k].toVector();
    const double denom = truth.norm();
    result.single_step_rel_error[static_cast<Index>(k)] =
        denom > 0.0 ? (pred - truth).norm() / denom : (pred - truth).norm();
  }
  result.predicted = std::move(march.trajectory);
  return result;
}

}  // namespace stiffnet
