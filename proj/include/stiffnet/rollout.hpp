#pragma once

#include <functional>
#include <vector>

#include "stiffnet/integrator.hpp"
#include "stiffnet/resnet.hpp"
#include "stiffnet/types.hpp"

namespace stiffnet {

// Physical-units map (u, dt) -> S(u) or next-state, so tests can march with
// exact closed-form dynamics in place of a trained surrogate.
using StateMap = std::function<Vector(const Vector&, double)>;

struct MarchResult {
  Trajectory trajectory;
  Index clip_count = 0;  // negative densities clipped to zero
};

struct TrajectoryMetrics {
  Vector channel_rel_l2;  // per channel: temperature, then species
  double ignition_delay_pred = 0.0;
  double ignition_delay_ref = 0.0;
  double ignition_delay_rel_error = 0.0;
};

struct RolloutResult {
  Trajectory predicted;
  TrajectoryMetrics metrics;
  Vector single_step_rel_error;  // one entry per predicted step
  Index clip_count = 0;
};

// Euler marching of the derivative map: u^n = u^{n-1} + dt S(u^{n-1}).
MarchResult marchDerivative(const ParallelSurrogate& surrogate, const State& u0,
                            double dt, Index n_steps, bool conserve_mass = false);
MarchResult marchDerivativeMap(const StateMap& derivative, const State& u0, double dt,
                               Index n_steps, bool conserve_mass = false);

// Iterated solution map: u^n = S(u^{n-1}); dt of the grid comes from the
// surrogate's training increment.
MarchResult marchSolution(const ParallelSurrogate& surrogate, const State& u0,
                          Index n_steps, bool conserve_mass = false);
MarchResult marchSolutionMap(const StateMap& next_state, const State& u0, double dt,
                             Index n_steps, bool conserve_mass = false);

// One-step predictions from ground-truth inputs; no error accumulation.
std::vector<State> singleStepPredictions(const ParallelSurrogate& surrogate,
                                         const Trajectory& reference);

// Rescales species densities so their sum matches the previous state's;
// temperature is untouched.
State enforceMass(const State& prev_state, const State& raw_state);

// Per-channel relative L2 over the shared grid plus ignition-delay metrics;
// ignition delay is the elapsed time to the maximum centered dT/dt.
TrajectoryMetrics trajectoryError(const Trajectory& predicted, const Trajectory& reference);

double ignitionDelay(const Trajectory& traj);

// Full evaluation against a reference: rollout from the reference's initial
// state across its grid, plus the single-step error profile.
RolloutResult evaluateRollout(const ParallelSurrogate& surrogate,
                              const Trajectory& reference, bool conserve_mass = false);

}  // namespace stiffnet
