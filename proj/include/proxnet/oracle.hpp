#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "proxnet/common.hpp"
#include "proxnet/data.hpp"

namespace proxnet {

/// Smooth local objective f_i = (1/m) sum_j l_j, with exact and minibatch
/// gradients. The full gradient is the minibatch gradient over every sample
/// in index order, so the two agree bit for bit.
class LocalObjective {
 public:
  virtual ~LocalObjective() = default;

  virtual std::string kind() const = 0;
  virtual Index dim() const = 0;
  virtual Index num_samples() const = 0;

  virtual double batch_value(const Vector& x, std::span<const Index> batch) const = 0;
  virtual Vector batch_gradient(const Vector& x, std::span<const Index> batch) const = 0;

  /// Lipschitz constant of the gradient; NaN when unknown.
  virtual double smoothness() const = 0;
  /// Analytic lower bound f_i^* used by the ABC envelope.
  virtual double lower_bound() const { return 0.0; }

  double value(const Vector& x) const { return batch_value(x, all_indices()); }
  Vector gradient(const Vector& x) const { return batch_gradient(x, all_indices()); }

 protected:
  std::span<const Index> all_indices() const;

 private:
  mutable std::vector<Index> all_;
};

using ObjectivePtr = std::shared_ptr<const LocalObjective>;

// --- sparse tanh classification -------------------------------------------

/// (1/|S|) sum_j [1 - tanh(b_j a_j^T x)].
double tanh_loss_value(const Vector& x, const Matrix& features, std::span<const int> labels);
/// -(1/|S|) sum_j (1 - tanh^2(b_j a_j^T x)) b_j a_j.
Vector tanh_loss_grad(const Vector& x, const Matrix& features, std::span<const int> labels);

class TanhLoss final : public LocalObjective {
 public:
  /// Labels must be +-1.
  explicit TanhLoss(Dataset data);

  std::string kind() const override { return "tanh"; }
  Index dim() const override { return data_.dim(); }
  Index num_samples() const override { return data_.size(); }
  double batch_value(const Vector& x, std::span<const Index> batch) const override;
  Vector batch_gradient(const Vector& x, std::span<const Index> batch) const override;
  double smoothness() const override { return smoothness_; }

 private:
  Dataset data_;
  double smoothness_;
};

// --- one-hidden-layer network ------------------------------------------------

struct MlpArch {
  Index d_in = 0;
  Index d_hidden = 0;
  Index d_out = 0;

  /// Flattened layout: W1 (d_hidden x d_in, row-major), b1, W2 (d_out x
  /// d_hidden, row-major), b2.
  Index num_params() const { return d_hidden * (d_in + 1) + d_out * (d_hidden + 1); }
};

struct LossAndGradient {
  double loss = 0.0;
  Vector gradient;
};

/// sigmoid hidden layer, softmax output, mean cross-entropy; gradient by
/// backpropagation in the flattened layout.
LossAndGradient mlp_forward_backward(const Vector& params, const Matrix& features,
                                     std::span<const int> labels, const MlpArch& arch);

class MlpLoss final : public LocalObjective {
 public:
  /// Labels must lie in [0, d_out).
  MlpLoss(Dataset data, MlpArch arch);

  std::string kind() const override { return "mlp"; }
  Index dim() const override { return arch_.num_params(); }
  Index num_samples() const override { return data_.size(); }
  double batch_value(const Vector& x, std::span<const Index> batch) const override;
  Vector batch_gradient(const Vector& x, std::span<const Index> batch) const override;
  double smoothness() const override;
  const MlpArch& arch() const noexcept { return arch_; }

 private:
  LossAndGradient evaluate(const Vector& x, std::span<const Index> batch) const;

  Dataset data_;
  MlpArch arch_;
};

// --- quadratic testbed -------------------------------------------------------

/// 1/2 x^T Q x + c^T x and its gradient Qx + c (no offset).
LossAndGradient quadratic_oracle(const Vector& x, const Matrix& q, const Vector& c);

/// f(x) = 1/2 x^T Q x + c^T x - min f, with per-sample gradient Qx + c + e_j
/// for centered perturbations e_j. Without perturbations the objective has a
/// single deterministic "sample".
class QuadraticObjective final : public LocalObjective {
 public:
  QuadraticObjective(Matrix q, Vector c, Matrix perturbations = {});

  std::string kind() const override { return "quadratic"; }
  Index dim() const override { return c_.size(); }
  Index num_samples() const override { return std::max<Index>(1, noise_.rows()); }
  double batch_value(const Vector& x, std::span<const Index> batch) const override;
  Vector batch_gradient(const Vector& x, std::span<const Index> batch) const override;
  double smoothness() const override { return smoothness_; }

  const Matrix& q() const noexcept { return q_; }
  const Vector& c() const noexcept { return c_; }
  /// A minimizer of the smooth part (least-norm when Q is singular).
  const Vector& minimizer() const noexcept { return minimizer_; }
  double min_value() const noexcept { return min_value_; }

 private:
  Matrix q_;
  Vector c_;
  Matrix noise_;
  double smoothness_ = 0.0;
  double min_value_ = 0.0;
  Vector minimizer_;
};

/// Reads a quadratic spec: "p <dim>", then "Q" with p rows, then "c" with one
/// row. '#' starts a comment.
std::shared_ptr<QuadraticObjective> load_quadratic(const std::string& path);

/// Random heterogeneous quadratics: agent i gets Q_i with spectrum in
/// [mu, L], c_i ~ N(0, c_scale^2 I) and `samples` centered Gaussian
/// perturbations of scale `noise` (none when samples == 0).
std::vector<ObjectivePtr> make_quadratic_testbed(Index agents, Index dim, std::uint64_t seed,
                                                 double mu = 1.0, double L = 4.0,
                                                 double c_scale = 1.0, Index samples = 0,
                                                 double noise = 0.0);

// --- stochastic gradients ----------------------------------------------------

/// Minibatch draws for one agent. The draw for iteration k comes from the
/// stream keyed by (master seed, agent, k), so two algorithms asking for the
/// same (agent, k) see the same noise.
class MinibatchSampler {
 public:
  MinibatchSampler(Index batch_size, std::uint64_t master_seed, Index agent,
                   bool with_replacement = true);

  Index batch_size() const noexcept { return batch_size_; }
  /// Indices into a dataset of `n` samples. Without replacement the indices
  /// are returned sorted.
  std::vector<Index> draw(Index n, std::uint64_t iteration) const;

 private:
  Index batch_size_;
  std::uint64_t master_;
  Index agent_;
  bool with_replacement_;
};

/// Minibatch mean gradient; unbiased for the full gradient.
Vector sample_gradient(const LocalObjective& obj, const Vector& x,
                       const MinibatchSampler& sampler, std::uint64_t iteration);

/// Gradient provider for a whole swarm. batch_size == 0 means exact gradients.
class GradientSource {
 public:
  GradientSource(std::vector<ObjectivePtr> agents, Index batch_size, std::uint64_t master_seed);

  Index agents() const noexcept { return static_cast<Index>(agents_.size()); }
  bool exact() const noexcept { return batch_size_ == 0; }
  Vector operator()(Index agent, const Vector& x, std::uint64_t iteration) const;
  const std::vector<ObjectivePtr>& objectives() const noexcept { return agents_; }

 private:
  std::vector<ObjectivePtr> agents_;
  std::vector<MinibatchSampler> samplers_;
  Index batch_size_;
};

// --- ABC condition -----------------------------------------------------------

/// E||g - grad f_i||^2 <= C0 (f_i(x) - f_i^*) + sigma^2.
struct ABCMeta {
  double c0 = 0.0;
  double sigma = 0.0;

  double envelope(double gap) const { return c0 * gap + sigma * sigma; }
};

/// Exact variance of the with-replacement minibatch mean gradient at x.
double minibatch_variance(const LocalObjective& obj, const Vector& x, Index batch_size);

/// Nonnegative least-squares slope C0 on the calibration points, then sigma^2
/// raised until every calibration point lies under the envelope.
ABCMeta fit_abc(const LocalObjective& obj, std::span<const Vector> points, Index batch_size);

}  // namespace proxnet
