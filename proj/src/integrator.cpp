#include "stiffnet/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stiffnet {

namespace {

double scaledResidual(const Vector& g, const Vector& u, const Vector& v,
                      const IntegratorConfig& config) {
  double r = 0.0;
  for (Index i = 0; i < g.size(); ++i) {
    const double scale =
        config.abs_tol + config.rel_tol * std::max(std::abs(u[i]), std::abs(v[i]));
    r = std::max(r, std::abs(g[i]) / scale);
  }
  return r;
}

}  // namespace

std::optional<State> stepImplicit(const Mechanism& mech, const State& state,
                                  double h, const IntegratorConfig& config) {
  if (h <= 0.0) throw std::invalid_argument("stepImplicit: h must be positive");
  const Vector u = state.toVector();
  const double t_new = state.time + h;
  Vector v = u;

  double prev_res = std::numeric_limits<double>::infinity();
  for (int it = 0; it < config.max_newton_iters; ++it) {
    if (!(v[0] > 0.0) || !v.allFinite()) return std::nullopt;
    State trial = State::fromVector(v, t_new);
    Vector g = v - u - h * rhs(mech, trial);
    const double res = scaledResidual(g, u, v, config);
    if (res <= 1e-9) return trial;
    // Rounding floor: no further progress possible and residual already deep
    // below the step tolerance.
    if (res <= 1e-2 && res >= 0.5 * prev_res) return trial;
    if (it > 2 && res >= prev_res && res > 1e-2) return std::nullopt;
    prev_res = res;

    Matrix newton_mat = -h * jacobian(mech, trial);
    newton_mat.diagonal().array() += 1.0;
    Vector delta = newton_mat.partialPivLu().solve(g);
    if (!delta.allFinite()) return std::nullopt;
    v -= delta;
  }

  // Accept only if the final residual is already below the step tolerance.
  if (!(v[0] > 0.0) || !v.allFinite()) return std::nullopt;
  State trial = State::fromVector(v, t_new);
  Vector g = v - u - h * rhs(mech, trial);
  if (scaledResidual(g, u, v, config) <= 1e-2) return trial;
  return std::nullopt;
}

Trajectory integrate(const Mechanism& mech, const State& state0, double t_end,
                     double sample_dt, const IntegratorConfig& config) {
  if (t_end <= 0.0) throw std::invalid_argument("integrate: t_end must be positive");
  if (sample_dt <= 0.0) throw std::invalid_argument("integrate: sample_dt must be positive");
  if (config.rel_tol <= 0.0 || config.abs_tol <= 0.0)
    throw std::invalid_argument("integrate: tolerances must be positive");
  const double n_real = t_end / sample_dt;
  const long n_samples = std::lround(n_real);
  if (n_samples < 1 || std::abs(n_real - static_cast<double>(n_samples)) > 1e-9 * n_real)
    throw std::invalid_argument("integrate: sample_dt must divide t_end");

  Trajectory traj;
  traj.sample_dt = sample_dt;
  traj.mechanism_id = mech.id();
  traj.t0 = state0.temperature;
  traj.states.reserve(n_samples + 1);

  State current = state0;
  current.densities = current.densities.cwiseMax(0.0);
  traj.states.push_back(current);

  const double t_start = state0.time;
  double h = std::min(config.initial_substep, sample_dt);

  for (long n = 1; n <= n_samples; ++n) {
    const double target = t_start + static_cast<double>(n) * sample_dt;
    int consecutive_failures = 0;
    while (current.time < target) {
      const double remaining = target - current.time;
      const double h_min =
          8.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(target), sample_dt);
      const bool lands = h >= remaining;
      const double h_try = lands ? remaining : h;

      // One full step against two half steps.
      auto full = stepImplicit(mech, current, h_try, config);
      std::optional<State> halves;
      if (full) {
        auto mid = stepImplicit(mech, current, 0.5 * h_try, config);
        if (mid) halves = stepImplicit(mech, *mid, 0.5 * h_try, config);
      }

      double err = std::numeric_limits<double>::infinity();
      if (full && halves) {
        err = 0.0;
        const Vector uf = full->toVector();
        const Vector uh = halves->toVector();
        const Vector uc = current.toVector();
        for (Index i = 0; i < uf.size(); ++i) {
          const double scale = config.abs_tol +
                               config.rel_tol * std::max(std::abs(uc[i]), std::abs(uh[i]));
          err = std::max(err, std::abs(uf[i] - uh[i]) / scale);
        }
      }

      if (err <= 1.0) {
        consecutive_failures = 0;
        current = *halves;
        current.time = lands ? target : current.time;
        const double grow = err > 0.0 ? 0.9 / std::sqrt(err) : 4.0;
        h = h_try * std::clamp(grow, 0.25, 4.0);
      } else {
        ++consecutive_failures;
        const double shrink =
            std::isfinite(err) ? std::max(0.25, 0.9 / std::sqrt(err)) : 0.5;
        h = h_try * shrink;
        if (h < h_min || consecutive_failures > 80)
          throw IntegrationError("integration stalled at t = " + std::to_string(current.time));
      }
    }
    current.densities = current.densities.cwiseMax(0.0);
    traj.states.push_back(current);
  }
  return traj;
}

}  // namespace stiffnet
