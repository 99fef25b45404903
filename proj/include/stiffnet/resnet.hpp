#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stiffnet/dataset.hpp"
#include "stiffnet/types.hpp"

namespace stiffnet {

// Smooth quadratic approximation of the ReLU: identical to max{0,x} outside
// the band |x| <= eps, quadratic inside, C^1 everywhere.
template <typename Scalar>
Scalar smoothRelu(Scalar x, Scalar eps) {
  if (x > eps) return x;
  if (x < -eps) return Scalar(0);
  return x * x / (4 * eps) + x / 2 + eps / 4;
}

template <typename Scalar>
Scalar smoothReluPrime(Scalar x, Scalar eps) {
  if (x > eps) return Scalar(1);
  if (x < -eps) return Scalar(0);
  return x / (2 * eps) + Scalar(0.5);
}

// One residual network:
//   y_1 = tau sigma(K_0 y_0 + b_0)
//   y_l = y_{l-1} + tau sigma(K_{l-1} y_{l-1} + b_{l-1}),  1 < l <= L-1
//   y_L = K_{L-1} y_{L-1}
// Hidden widths are equal; the output layer is linear and biasless.
struct ResNetParams {
  std::vector<Index> widths;    // n_0 .. n_L
  std::vector<Matrix> weights;  // K_l of shape n_{l+1} x n_l
  std::vector<Vector> biases;   // b_0 .. b_{L-2}
  double tau = 1.0;
  double epsilon = 0.1;

  Index layerCount() const { return static_cast<Index>(widths.size()) - 1; }  // L
  Index hiddenLayerCount() const { return layerCount() - 1; }
  Index parameterCount() const;

  // Row-major packing K_0, b_0, K_1, b_1, ..., K_{L-2}, b_{L-2}, K_{L-1}.
  Vector flatten() const;
  void unflatten(const Vector& theta);
};

void validateShape(const ResNetParams& params);

// tau = 2/(L-1) with L the recursion's layer count.
double defaultTau(Index layer_count);

// Zero-initialized network of the given widths.
ResNetParams makeResNet(const std::vector<Index>& widths, double tau, double epsilon);

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
// The draw sequence is fixed by the seed alone.
ResNetParams randomInit(const std::vector<Index>& widths, double tau,
                        double epsilon, std::uint64_t seed);

Vector forward(const ResNetParams& params, const Vector& y0);
// Column-per-sample batch evaluation.
Matrix forwardBatch(const ResNetParams& params, const Matrix& y0);

struct LossConfig {
  double lambda = 1e-7;
  bool use_l1 = true;          // l1+l2 when true, pure l2 otherwise
  double l1_smoothing = 1e-8;  // mu in sqrt(theta^2 + mu^2) - mu
};

struct LossGrad {
  double value = 0.0;
  Vector gradient;  // in flatten() order
};

// J = 1/(2N) sum_n ||y_L^n - t^n||^2 + lambda/2 (||theta||_1s + ||theta||_2^2),
// with the l1 term smoothed; gradient by reverse accumulation through the
// recursion (adjoint), exact for the smoothed objective.
LossGrad lossAndGradient(const ResNetParams& params, const Matrix& inputs,
                         const Matrix& targets, const LossConfig& config);

// Data term only: 1/(2N) sum ||y_L - t||^2.
double dataLoss(const ResNetParams& params, const Matrix& inputs,
                const Matrix& targets);

// M+1 single-output networks sharing one input; together with the frozen
// scalers they form the surrogate map in physical units.
struct ParallelSurrogate {
  std::vector<ResNetParams> nets;            // one per output channel
  std::vector<ScalerParams> input_scalers;   // M+2 channels
  std::vector<ScalerParams> target_scalers;  // M+1 channels
  Approach approach = Approach::Derivative;
  double dt = 0.0;                           // training time increment
  std::vector<std::string> channel_names;    // temperature, species...

  Index outputCount() const { return static_cast<Index>(nets.size()); }

  // Scales (u, dt), evaluates every network, inverts the target scalers.
  Vector evaluate(const Vector& u, double dt) const;
};

}  // namespace stiffnet
