#include "stiffnet/resnet.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace stiffnet {

namespace {

double uniformUnit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
}

Matrix activate(const Matrix& a, double eps) {
  return a.unaryExpr([eps](double x) { return smoothRelu(x, eps); });
}

Matrix activatePrime(const Matrix& a, double eps) {
  return a.unaryExpr([eps](double x) { return smoothReluPrime(x, eps); });
}

}  // namespace

void validateShape(const ResNetParams& params) {
  const Index num_layers = params.layerCount();
  if (num_layers < 2)
    throw std::invalid_argument("resnet: at least two layers required");
  if (params.epsilon <= 0.0) throw std::invalid_argument("resnet: epsilon must be positive");
  if (params.tau <= 0.0) throw std::invalid_argument("resnet: tau must be positive");
  for (Index l = 1; l + 1 < num_layers; ++l)
    if (params.widths[l] != params.widths[l + 1])
      throw std::invalid_argument("resnet: hidden widths must be equal");
  if (static_cast<Index>(params.weights.size()) != num_layers)
    throw std::invalid_argument("resnet: expected L weight matrices");
  if (static_cast<Index>(params.biases.size()) != num_layers - 1)
    throw std::invalid_argument("resnet: expected L-1 bias vectors");
  for (Index l = 0; l < num_layers; ++l) {
    if (params.weights[l].rows() != params.widths[l + 1] ||
        params.weights[l].cols() != params.widths[l])
      throw std::invalid_argument("resnet: weight shape mismatch");
    if (l + 1 < num_layers && params.biases[l].size() != params.widths[l + 1])
      throw std::invalid_argument("resnet: bias shape mismatch");
  }
}

double defaultTau(Index layer_count) {
  if (layer_count < 2) throw std::invalid_argument("defaultTau: need at least two layers");
  return 2.0 / static_cast<double>(layer_count - 1);
}

Index ResNetParams::parameterCount() const {
  Index n = 0;
  for (const auto& k : weights) n += k.size();
  for (const auto& b : biases) n += b.size();
  return n;
}

Vector ResNetParams::flatten() const {
  Vector theta(parameterCount());
  Index pos = 0;
  const Index num_layers = layerCount();
  for (Index l = 0; l < num_layers; ++l) {
    const Matrix& k = weights[l];
    for (Index r = 0; r < k.rows(); ++r)
      for (Index c = 0; c < k.cols(); ++c) theta[pos++] = k(r, c);
    if (l + 1 < num_layers) {
      theta.segment(pos, biases[l].size()) = biases[l];
      pos += biases[l].size();
    }
  }
  return theta;
}

void ResNetParams::unflatten(const Vector& theta) {
  if (theta.size() != parameterCount())
    throw std::invalid_argument("unflatten: parameter count mismatch");
  Index pos = 0;
  const Index num_layers = layerCount();
  for (Index l = 0; l < num_layers; ++l) {
    Matrix& k = weights[l];
    for (Index r = 0; r < k.rows(); ++r)
      for (Index c = 0; c < k.cols(); ++c) k(r, c) = theta[pos++];
    if (l + 1 < num_layers) {
      biases[l] = theta.segment(pos, biases[l].size());
      pos += biases[l].size();
    }
  }
}

ResNetParams makeResNet(const std::vector<Index>& widths, double tau, double epsilon) {
  ResNetParams p;
  p.widths = widths;
  p.tau = tau;
  p.epsilon = epsilon;
  const Index num_layers = static_cast<Index>(widths.size()) - 1;
  if (num_layers < 2) throw std::invalid_argument("makeResNet: at least two layers required");
  for (Index l = 0; l < num_layers; ++l) {
    p.weights.push_back(Matrix::Zero(widths[l + 1], widths[l]));
    if (l + 1 < num_layers) p.biases.push_back(Vector::Zero(widths[l + 1]));
  }
  validateShape(p);
  return p;
}

ResNetParams randomInit(const std::vector<Index>& widths, double tau,
                        double epsilon, std::uint64_t seed) {
  ResNetParams p = makeResNet(widths, tau, epsilon);
  std::mt19937_64 rng(seed);
  for (auto& k : p.weights) {
    const double r = 1.0 / std::sqrt(static_cast<double>(k.cols()));
    for (Index row = 0; row < k.rows(); ++row)
      for (Index col = 0; col < k.cols(); ++col)
        k(row, col) = r * (2.0 * uniformUnit(rng) - 1.0);
  }
  return p;
}

Matrix forwardBatch(const ResNetParams& params, const Matrix& y0) {
  if (y0.rows() != params.widths.front())
    throw std::invalid_argument("forward: input dimension mismatch");
  const Index num_layers = params.layerCount();
  Matrix y = params.tau * activate((params.weights[0] * y0).colwise() + params.biases[0],
                                   params.epsilon);
  for (Index l = 2; l <= num_layers - 1; ++l) {
    const Matrix a = (params.weights[l - 1] * y).colwise() + params.biases[l - 1];
    y += params.tau * activate(a, params.epsilon);
    if (!y.allFinite())
      throw std::runtime_error("forward: non-finite activation at layer " + std::to_string(l));
  }
  return params.weights[num_layers - 1] * y;
}

Vector forward(const ResNetParams& params, const Vector& y0) {
  return forwardBatch(params, y0);
}

double dataLoss(const ResNetParams& params, const Matrix& inputs, const Matrix& targets) {
  const Matrix r = forwardBatch(params, inputs) - targets;
  return 0.5 * r.squaredNorm() / static_cast<double>(inputs.cols());
}

LossGrad lossAndGradient(const ResNetParams& params, const Matrix& inputs,
                         const Matrix& targets, const LossConfig& config) {
  if (inputs.cols() == 0) throw std::invalid_argument("lossAndGradient: empty batch");
  if (inputs.cols() != targets.cols())
    throw std::invalid_argument("lossAndGradient: input/target batch mismatch");
  if (targets.rows() != params.widths.back())
    throw std::invalid_argument("lossAndGradient: target dimension mismatch");

  const Index num_layers = params.layerCount();
  const Index n_batch = inputs.cols();
  const double eps = params.epsilon;

  // Forward sweep storing layer states and pre-activations.
  std::vector<Matrix> states(num_layers);      // y_0 .. y_{L-1}
  std::vector<Matrix> preacts(num_layers - 1); // a_0 .. a_{L-2}
  states[0] = inputs;
  preacts[0] = (params.weights[0] * states[0]).colwise() + params.biases[0];
  states[1] = params.tau * activate(preacts[0], eps);
  for (Index l = 2; l <= num_layers - 1; ++l) {
    preacts[l - 1] = (params.weights[l - 1] * states[l - 1]).colwise() + params.biases[l - 1];
    states[l] = states[l - 1] + params.tau * activate(preacts[l - 1], eps);
    if (!states[l].allFinite())
      throw std::runtime_error("lossAndGradient: non-finite activation at layer " +
                               std::to_string(l));
  }
  const Matrix output = params.weights[num_layers - 1] * states[num_layers - 1];
  if (!output.allFinite())
    throw std::runtime_error("lossAndGradient: non-finite activation at layer " +
                             std::to_string(num_layers));

  const Matrix residual = (output - targets) / static_cast<double>(n_batch);
  double value = 0.5 * static_cast<double>(n_batch) * residual.squaredNorm();

  // Adjoint sweep.
  std::vector<Matrix> grad_w(num_layers);
  std::vector<Vector> grad_b(num_layers - 1);
  grad_w[num_layers - 1] = residual * states[num_layers - 1].transpose();
  Matrix g = params.weights[num_layers - 1].transpose() * residual;
  for (Index l = num_layers - 1; l >= 2; --l) {
    const Matrix w = params.tau * activatePrime(preacts[l - 1], eps).cwiseProduct(g);
    grad_w[l - 1] = w * states[l - 1].transpose();
    grad_b[l - 1] = w.rowwise().sum();
    g += params.weights[l - 1].transpose() * w;
  }
  {
    const Matrix w = params.tau * activatePrime(preacts[0], eps).cwiseProduct(g);
    grad_w[0] = w * states[0].transpose();
    grad_b[0] = w.rowwise().sum();
  }

  ResNetParams grads = params;
  grads.weights = std::move(grad_w);
  grads.biases = std::move(grad_b);
  LossGrad out;
  out.gradient = grads.flatten();

  // Regularization on the concatenated parameters.
  if (config.lambda > 0.0) {
    const Vector theta = params.flatten();
    const double lam = config.lambda;
    double reg = 0.5 * lam * theta.squaredNorm();
    Vector reg_grad = lam * theta;
    if (config.use_l1) {
      const double mu = config.l1_smoothing;
      for (Index i = 0; i < theta.size(); ++i) {
        const double root = std::sqrt(theta[i] * theta[i] + mu * mu);
        reg += 0.5 * lam * (root - mu);
        reg_grad[i] += 0.5 * lam * theta[i] / root;
      }
    }
    value += reg;
    out.gradient += reg_grad;
  }
  out.value = value;
  if (!std::isfinite(out.value) || !out.gradient.allFinite())
    throw std::runtime_error("lossAndGradient: non-finite objective");
  return out;
}

Vector ParallelSurrogate::evaluate(const Vector& u, double dt_step) const {
  const Index n_in = static_cast<Index>(input_scalers.size());
  if (u.size() + 1 != n_in)
    throw std::invalid_argument("ParallelSurrogate::evaluate: state dimension mismatch");
  Vector x(n_in);
  for (Index i = 0; i + 1 < n_in; ++i) x[i] = applyScaler(input_scalers[i], u[i]);
  x[n_in - 1] = applyScaler(input_scalers[n_in - 1], dt_step);

  Vector out(outputCount());
  for (Index c = 0; c < outputCount(); ++c) {
    const Vector y = forward(nets[c], x);
    out[c] = invertScaler(target_scalers[c], y[0]);
  }
  return out;
}

}  // namespace stiffnet
