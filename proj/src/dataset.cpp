#include "stiffnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace stiffnet {

namespace {

// Unbiased bounded draw; kept free of std::uniform_int_distribution so that
// splits reproduce across standard libraries.
std::uint64_t boundedDraw(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = bound * (UINT64_MAX / bound);
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

}  // namespace

ScalerParams fitScaler(const Vector& values, ScaleMode mode) {
  if (values.size() == 0)
    throw std::invalid_argument("fitScaler: empty value set");
  Vector v = values;
  if (mode == ScaleMode::Log) {
    for (Index i = 0; i < v.size(); ++i) {
      if (!(v[i] > 0.0))
        throw std::domain_error("fitScaler: log mode requires strictly positive values");
      v[i] = std::log(v[i]);
    }
  }
  ScalerParams p;
  p.mode = mode;
  p.mu = v.mean();
  p.sigma = std::sqrt((v.array() - p.mu).square().mean());  // population convention
  if (p.sigma == 0.0) {
    p.degenerate = true;
    return p;
  }
  const Vector z = (v.array() - p.mu) / p.sigma;
  p.z_min = z.minCoeff();
  p.z_max = z.maxCoeff();
  p.degenerate = (p.z_min == p.z_max);
  return p;
}

double applyScaler(const ScalerParams& params, double x) {
  if (params.degenerate) return 0.5;
  double v = x;
  if (params.mode == ScaleMode::Log) {
    if (!(v > 0.0))
      throw std::domain_error("applyScaler: log mode requires a positive value");
    v = std::log(v);
  }
  const double z = (v - params.mu) / params.sigma;
  return (z - params.z_min) / (params.z_max - params.z_min);
}

double invertScaler(const ScalerParams& params, double x_hat) {
  if (params.degenerate)
    return params.mode == ScaleMode::Log ? std::exp(params.mu) : params.mu;
  const double z = params.z_min + x_hat * (params.z_max - params.z_min);
  const double v = params.mu + params.sigma * z;
  return params.mode == ScaleMode::Log ? std::exp(v) : v;
}

Matrix Dataset::scaledInputs() const {
  Matrix out(inputs.rows(), inputs.cols());
  for (Index c = 0; c < inputs.cols(); ++c)
    for (Index r = 0; r < inputs.rows(); ++r)
      out(r, c) = applyScaler(input_scalers[c], inputs(r, c));
  return out;
}

Matrix Dataset::scaledTargets() const {
  Matrix out(targets.rows(), targets.cols());
  for (Index c = 0; c < targets.cols(); ++c)
    for (Index r = 0; r < targets.rows(); ++r)
      out(r, c) = applyScaler(target_scalers[c], targets(r, c));
  return out;
}

RawPairs buildPairs(const Trajectory& traj, Approach approach, double dt) {
  if (traj.size() < 2)
    throw std::invalid_argument("buildPairs: trajectory must have at least 2 states");
  if (std::abs(traj.sample_dt - dt) > 1e-12 * std::max(traj.sample_dt, dt))
    throw std::invalid_argument("buildPairs: trajectory sample_dt does not match dt");

  const Index n_pairs = traj.size() - 1;
  const Index m = traj.states.front().densities.size();
  RawPairs pairs;
  pairs.inputs.resize(n_pairs, m + 2);
  pairs.targets.resize(n_pairs, m + 1);
  for (Index n = 0; n < n_pairs; ++n) {
    const Vector u_prev = traj.states[n].toVector();
    const Vector u_next = traj.states[n + 1].toVector();
    pairs.inputs.row(n).head(m + 1) = u_prev;
    pairs.inputs(n, m + 1) = dt;
    pairs.targets.row(n) = approach == Approach::Derivative
                               ? Vector((u_next - u_prev) / dt)
                               : u_next;
  }
  return pairs;
}

FuelGroup classifyFuel(double phi) {
  if (!(phi > 0.0)) throw std::domain_error("classifyFuel: phi must be positive");
  if (phi <= 0.1) return FuelGroup::Lean;
  if (phi <= 2.0) return FuelGroup::Balanced;
  return FuelGroup::Rich;
}

std::string fuelGroupName(FuelGroup group) {
  switch (group) {
    case FuelGroup::Lean: return "lean";
    case FuelGroup::Balanced: return "balanced";
    case FuelGroup::Rich: return "rich";
  }
  return "unknown";
}

void fitDatasetScalers(Dataset& dataset, ScaleMode mode) {
  dataset.input_scalers.clear();
  dataset.target_scalers.clear();
  for (Index c = 0; c < dataset.inputs.cols(); ++c)
    dataset.input_scalers.push_back(fitScaler(dataset.inputs.col(c), mode));
  for (Index c = 0; c < dataset.targets.cols(); ++c)
    dataset.target_scalers.push_back(fitScaler(dataset.targets.col(c), mode));
}

Dataset balanceByReplication(const std::vector<RawPairs>& sets,
                             const std::vector<SetDescriptor>& descriptors,
                             Approach approach, double dt) {
  if (sets.empty()) throw std::invalid_argument("balanceByReplication: no sets");
  if (sets.size() != descriptors.size())
    throw std::invalid_argument("balanceByReplication: one descriptor per set required");

  Index total = 0;
  const Index in_cols = sets.front().inputs.cols();
  const Index out_cols = sets.front().targets.cols();
  for (std::size_t s = 0; s < sets.size(); ++s) {
    if (descriptors[s].multiplicity < 1)
      throw std::invalid_argument("balanceByReplication: multiplicities must be positive");
    if (sets[s].inputs.cols() != in_cols || sets[s].targets.cols() != out_cols)
      throw std::invalid_argument("balanceByReplication: inconsistent channel counts");
    total += sets[s].inputs.rows() * descriptors[s].multiplicity;
  }

  Dataset ds;
  ds.approach = approach;
  ds.dt = dt;
  ds.sets = descriptors;
  ds.inputs.resize(total, in_cols);
  ds.targets.resize(total, out_cols);
  ds.sources.reserve(total);
  Index row = 0;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const Index n = sets[s].inputs.rows();
    for (int copy = 0; copy < descriptors[s].multiplicity; ++copy) {
      ds.inputs.middleRows(row, n) = sets[s].inputs;
      ds.targets.middleRows(row, n) = sets[s].targets;
      for (Index i = 0; i < n; ++i)
        ds.sources.push_back({descriptors[s].set_id, i});
      row += n;
    }
  }
  fitDatasetScalers(ds, ScaleMode::Linear);
  return ds;
}

std::pair<Dataset, Dataset> splitValidation(const Dataset& dataset,
                                            double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("splitValidation: fraction must lie in (0, 1)");
  const Index n = dataset.size();
  const Index n_val = static_cast<Index>(std::llround(fraction * static_cast<double>(n)));
  if (n_val < 1 || n_val >= n)
    throw std::invalid_argument("splitValidation: fraction yields an empty split");

  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  for (Index i = n - 1; i > 0; --i) {
    const Index j = static_cast<Index>(boundedDraw(rng, static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  std::vector<Index> val_idx(order.begin(), order.begin() + n_val);
  std::vector<Index> train_idx(order.begin() + n_val, order.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  auto take = [&](const std::vector<Index>& idx) {
    Dataset part;
    part.approach = dataset.approach;
    part.dt = dataset.dt;
    part.input_scalers = dataset.input_scalers;
    part.target_scalers = dataset.target_scalers;
    part.sets = dataset.sets;
    part.inputs.resize(static_cast<Index>(idx.size()), dataset.inputs.cols());
    part.targets.resize(static_cast<Index>(idx.size()), dataset.targets.cols());
    part.sources.reserve(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      part.inputs.row(static_cast<Index>(r)) = dataset.inputs.row(idx[r]);
      part.targets.row(static_cast<Index>(r)) = dataset.targets.row(idx[r]);
      part.sources.push_back(dataset.sources.empty() ? SourceRef{}
                                                     : dataset.sources[idx[r]]);
    }
    return part;
  };
  return {take(train_idx), take(val_idx)};
}

}  // namespace stiffnet
