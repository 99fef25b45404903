#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stiffnet/integrator.hpp"
#include "stiffnet/types.hpp"

namespace stiffnet {

enum class ScaleMode { Linear, Log };
enum class Approach { Derivative, Solution };
enum class FuelGroup { Lean, Balanced, Rich };

// Two-stage channel scaling: standardize by (mu, sigma), then min-max the
// standardized values to [0,1]. Log mode applies the same stages to ln(x).
// A degenerate channel (all values equal) maps to 0.5 and inverts back to
// the constant.
struct ScalerParams {
  ScaleMode mode = ScaleMode::Linear;
  double mu = 0.0;
  double sigma = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;
  bool degenerate = false;
};

ScalerParams fitScaler(const Vector& values, ScaleMode mode);
double applyScaler(const ScalerParams& params, double x);
double invertScaler(const ScalerParams& params, double x_hat);

// Mirrors the per-set bookkeeping of the training-data tables: point count,
// equivalence ratio and initial temperature, plus the replication factor.
struct SetDescriptor {
  int set_id = 0;
  Index n_points = 0;
  double phi = 0.0;
  double t0 = 0.0;
  int multiplicity = 1;
};

// Provenance of one sample: which set and which step it came from.
struct SourceRef {
  int set_id = 0;
  Index step = 0;
};

// Unscaled (input, target) pairs from one trajectory. Inputs are
// (T, rho_1..rho_M, dt) in R^{M+2}; targets live in R^{M+1}.
struct RawPairs {
  Matrix inputs;
  Matrix targets;
};

struct Dataset {
  Matrix inputs;    // raw, one row per sample
  Matrix targets;   // raw
  std::vector<ScalerParams> input_scalers;
  std::vector<ScalerParams> target_scalers;
  Approach approach = Approach::Derivative;
  double dt = 0.0;
  std::vector<SourceRef> sources;
  std::vector<SetDescriptor> sets;

  Index size() const { return inputs.rows(); }
  Matrix scaledInputs() const;
  Matrix scaledTargets() const;
};

// Derivative approach targets (u^n - u^{n-1})/dt; solution approach targets
// u^n. dt is appended as the last input channel. N states yield N-1 pairs.
RawPairs buildPairs(const Trajectory& traj, Approach approach, double dt);

FuelGroup classifyFuel(double phi);
std::string fuelGroupName(FuelGroup group);

// Concatenates the sets, each repeated per its descriptor multiplicity, and
// fits one scaler per channel on the combined multiset.
Dataset balanceByReplication(const std::vector<RawPairs>& sets,
                             const std::vector<SetDescriptor>& descriptors,
                             Approach approach, double dt);

// Deterministic random split; both halves inherit the full set's scalers.
std::pair<Dataset, Dataset> splitValidation(const Dataset& dataset,
                                            double fraction, std::uint64_t seed);

// Fits fresh per-channel scalers for an already-assembled dataset.
void fitDatasetScalers(Dataset& dataset, ScaleMode mode);

}  // namespace stiffnet
