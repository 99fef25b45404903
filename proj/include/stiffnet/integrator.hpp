#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stiffnet/mechanism.hpp"
#include "stiffnet/types.hpp"

namespace stiffnet {

// Uniformly sampled time series of states, plus provenance metadata.
struct Trajectory {
  double sample_dt = 0.0;
  std::vector<State> states;
  double phi = 0.0;
  double t0 = 0.0;
  std::string mechanism_id;

  Index size() const { return static_cast<Index>(states.size()); }
};

struct IntegratorConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  int max_newton_iters = 12;
  double initial_substep = 1e-9;
};

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One backward-Euler step of size h: solves u_new - u - h S(u_new) = 0 by
// Newton iteration on the analytic Jacobian. Returns nullopt when Newton
// fails to converge within config.max_newton_iters (caller halves h).
std::optional<State> stepImplicit(const Mechanism& mech, const State& state,
                                  double h, const IntegratorConfig& config = {});

// Integrates du/dt = S(u) from state0 to t_end with adaptive internal
// substepping (step-doubling error control), reporting states exactly on the
// uniform grid t_0 + n sample_dt. Substeps land on sample times, so reported
// states are never interpolated.
Trajectory integrate(const Mechanism& mech, const State& state0, double t_end,
                     double sample_dt, const IntegratorConfig& config = {});

}  // namespace stiffnet
