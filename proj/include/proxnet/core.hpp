#pragma once

#include <functional>
#include <vector>

#include "proxnet/common.hpp"
#include "proxnet/kernels.hpp"
#include "proxnet/oracle.hpp"
#include "proxnet/prox.hpp"

namespace proxnet {

using GradientFn = std::function<Vector(const Vector&)>;

/// min_x f(x) + phi(x) with f = (1/n) sum_i f_i, solved through prox_{gamma phi}.
class CompositeProblem {
 public:
  /// Requires gamma > 0 and gamma < 1/rho when phi is weakly convex. L is
  /// the largest declared agent smoothness (NaN if any is unknown).
  CompositeProblem(std::vector<ObjectivePtr> agents, ProxOperator phi, double gamma);

  Index agents() const noexcept { return static_cast<Index>(agents_.size()); }
  Index dim() const noexcept { return agents_.front()->dim(); }
  const std::vector<ObjectivePtr>& objectives() const noexcept { return agents_; }
  const LocalObjective& objective(Index i) const { return *agents_[i]; }
  const ProxOperator& phi() const noexcept { return phi_; }
  double gamma() const noexcept { return gamma_; }
  double smoothness() const noexcept { return smoothness_; }
  double rho() const noexcept { return phi_.rho(); }

  /// (1/n) sum_i grad f_i(x), summed in agent order.
  Vector gradient(const Vector& x) const;
  double smooth_value(const Vector& x) const;
  /// psi(x) = f(x) + phi(x).
  ExtendedReal objective(const Vector& x) const;
  Vector prox(const Vector& z) const { return phi_.prox(z, gamma_); }

  GradientFn gradient_fn() const;
  GradientFn agent_gradient_fn(Index i) const;

 private:
  std::vector<ObjectivePtr> agents_;
  ProxOperator phi_;
  double gamma_;
  double smoothness_;
};

/// grad f(prox(z)) + (z - prox(z)) / gamma.
Vector normal_map(const Vector& z, const GradientFn& grad_f, const ProxOperator& prox, double gamma);
Vector normal_map(const CompositeProblem& problem, const Vector& z);
/// Normal map of psi_i = f_i + phi.
Vector agent_normal_map(const CompositeProblem& problem, const Vector& z, Index i);

/// x - prox(x - gamma grad f(x)); vanishes exactly at stationary points.
Vector natural_residual(const Vector& x, const GradientFn& grad_f, const ProxOperator& prox,
                        double gamma);

/// (1/n) sum_i ||natural_residual(x_i) / gamma||^2 using the global gradient.
double stationarity_measure(const Matrix& x, const CompositeProblem& problem,
                            Exec exec = Exec::parallel);

/// Lipschitz constant (L - rho + 2/gamma) / (1 - gamma rho) of the normal map.
double lipschitz_LF(double L, double rho, double gamma);

/// ||Z - 1 zbar^T||_F^2.
double consensus_error(const Matrix& z);

/// min{1/(4(rho + L)), (2 - sqrt 2)/(2 rho)}; the second term is dropped when rho = 0.
double gamma_safety_bound(double L, double rho);

/// Rate constants of the consensus recursion: lambda for gradient tracking and
/// sqrt(lambda) for exact diffusion.
inline double beta_gradient_tracking(double lambda) { return lambda; }
double beta_exact_diffusion(double lambda);

}  // namespace proxnet
