#pragma once

#include <string>
#include <vector>

#include "stiffnet/dataset.hpp"
#include "stiffnet/integrator.hpp"
#include "stiffnet/resnet.hpp"
#include "stiffnet/rollout.hpp"
#include "stiffnet/trainer.hpp"
#include "stiffnet/types.hpp"

namespace stiffnet {

// Trajectory CSV: header `time,temperature,rho_<species>,...`; a JSON
// sidecar `<stem>.meta.json` records phi, T0, mechanism id, sample_dt and
// tolerances. Values are written with full round-trip precision.

struct TrajectoryFile {
  Trajectory trajectory;
  std::vector<std::string> species_names;
};

std::string metaPathFor(const std::string& csv_path);

void saveTrajectory(const std::string& csv_path, const Trajectory& traj,
                    const std::vector<std::string>& species_names,
                    const IntegratorConfig& config = {});
TrajectoryFile loadTrajectory(const std::string& csv_path);

// Dataset CSV of raw pairs (`set_id,step,x_*,y_*`) with a JSON sidecar for
// the scalers, approach, dt and source-set descriptors.
void saveDataset(const std::string& csv_path, const Dataset& dataset);
Dataset loadDataset(const std::string& csv_path);

// Network checkpoint: widths, tau, epsilon, row-major weights and biases,
// plus the associated scalers. Reload is bit-exact.
void saveCheckpoint(const std::string& path, const ResNetParams& net,
                    const std::vector<ScalerParams>& input_scalers,
                    const ScalerParams& target_scaler, Approach approach, double dt,
                    Index channel, const std::vector<std::string>& channel_names);
ResNetParams loadCheckpoint(const std::string& path);

// Whole-surrogate persistence: `surrogate.json` index plus one
// `channel_<i>.json` checkpoint per output channel in `dir`.
void saveSurrogate(const std::string& dir, const ParallelSurrogate& surrogate);
ParallelSurrogate loadSurrogate(const std::string& dir);

// Per-channel training history CSV: `iter,train_loss,val_loss,step,grad_norm`.
void saveHistory(const std::string& path, const TrainHistory& history);

void saveMetrics(const std::string& path, const RolloutResult& result,
                 const std::vector<std::string>& channel_names);

// Manifest of produced/consumed files with FNV-1a content hashes.
void writeManifest(const std::string& path, const std::vector<std::string>& files);

std::string formatDouble(double v);  // shortest exact round-trip
std::uint64_t hashFile(const std::string& path);

}  // namespace stiffnet
