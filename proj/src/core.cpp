#include "proxnet/core.hpp"

#include <cmath>
#include <limits>

namespace proxnet {

CompositeProblem::CompositeProblem(std::vector<ObjectivePtr> agents, ProxOperator phi, double gamma)
    : agents_(std::move(agents)), phi_(std::move(phi)), gamma_(gamma) {
  if (agents_.empty()) throw ParameterError("problem needs at least one agent");
  for (const auto& a : agents_) {
    if (!a) throw ParameterError("null agent objective");
    if (a->dim() != agents_.front()->dim()) throw ParameterError("agents disagree on dimension");
  }
  phi_.check_gamma(gamma_);
  smoothness_ = 0.0;
  for (const auto& a : agents_) {
    const double l = a->smoothness();
    if (std::isnan(l)) {
      smoothness_ = std::numeric_limits<double>::quiet_NaN();
      break;
    }
    smoothness_ = std::max(smoothness_, l);
  }
}

Vector CompositeProblem::gradient(const Vector& x) const {
  Vector g = Vector::Zero(x.size());
  for (const auto& a : agents_) g += a->gradient(x);
  return g / static_cast<double>(agents_.size());
}

double CompositeProblem::smooth_value(const Vector& x) const {
  double v = 0.0;
  for (const auto& a : agents_) v += a->value(x);
  return v / static_cast<double>(agents_.size());
}

ExtendedReal CompositeProblem::objective(const Vector& x) const {
  return ExtendedReal(smooth_value(x)) + phi_.phi(x);
}

GradientFn CompositeProblem::gradient_fn() const {
  return [this](const Vector& x) { return gradient(x); };
}

GradientFn CompositeProblem::agent_gradient_fn(Index i) const {
  return [this, i](const Vector& x) { return agents_[i]->gradient(x); };
}

Vector normal_map(const Vector& z, const GradientFn& grad_f, const ProxOperator& prox,
                  double gamma) {
  const Vector x = prox.prox(z, gamma);
  return grad_f(x) + (z - x) / gamma;
}

Vector normal_map(const CompositeProblem& problem, const Vector& z) {
  return normal_map(z, problem.gradient_fn(), problem.phi(), problem.gamma());
}

Vector agent_normal_map(const CompositeProblem& problem, const Vector& z, Index i) {
  if (i < 0 || i >= problem.agents()) throw ParameterError("agent index out of range");
  return normal_map(z, problem.agent_gradient_fn(i), problem.phi(), problem.gamma());
}

Vector natural_residual(const Vector& x, const GradientFn& grad_f, const ProxOperator& prox,
                        double gamma) {
  if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
  return x - prox.prox(x - gamma * grad_f(x), gamma);
}

double stationarity_measure(const Matrix& x, const CompositeProblem& problem, Exec exec) {
  const Index n = x.rows();
  if (n == 0) return 0.0;
  std::vector<double> per_agent(n);
  const double gamma = problem.gamma();
  const auto grad = problem.gradient_fn();
  kernels::for_each_row(n, exec, [&](Index i) {
    const Vector r = natural_residual(x.row(i).transpose(), grad, problem.phi(), gamma) / gamma;
    per_agent[i] = r.squaredNorm();
  });
  double sum = 0.0;
  for (double v : per_agent) sum += v;
  return sum / static_cast<double>(n);
}

double lipschitz_LF(double L, double rho, double gamma) {
  if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
  if (rho < 0.0) throw ParameterError("rho must be nonnegative");
  if (rho > 0.0 && !(gamma * rho < 1.0)) {
    throw ParameterError("L_F needs gamma < 1/rho");
  }
  return (L - rho + 2.0 / gamma) / (1.0 - gamma * rho);
}

double consensus_error(const Matrix& z) {
  if (z.rows() == 0) return 0.0;
  const Vector mean = kernels::row_mean(z);
  double acc = 0.0;
  for (Index i = 0; i < z.rows(); ++i) acc += (z.row(i).transpose() - mean).squaredNorm();
  return acc;
}

double gamma_safety_bound(double L, double rho) {
  double bound = 1.0 / (4.0 * (rho + L));
  if (rho > 0.0) bound = std::min(bound, (2.0 - std::sqrt(2.0)) / (2.0 * rho));
  return bound;
}

double beta_exact_diffusion(double lambda) { return std::sqrt(lambda); }

}  // namespace proxnet
