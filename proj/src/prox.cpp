#include "proxnet/prox.hpp"

#include <cmath>

namespace proxnet {

double ExtendedReal::value() const {
  if (infinite_) throw DomainError("value is +infinity (outside dom phi)");
  return value_;
}

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw ParameterError(std::string(what) + " must be positive");
}

double soft(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

Vector prox_zero(const Vector& x, double gamma) {
  require_positive(gamma, "gamma");
  return x;
}

Vector prox_l1(const Vector& x, double gamma, double nu) {
  require_positive(gamma, "gamma");
  require_positive(nu, "nu");
  const double t = gamma * nu;
  return x.unaryExpr([t](double v) { return soft(v, t); });
}

Vector prox_elastic_net(const Vector& x, double gamma, double nu1, double nu2) {
  require_positive(gamma, "gamma");
  require_positive(nu1, "nu1");
  if (nu2 < 0.0) throw ParameterError("nu2 must be nonnegative");
  const double t = gamma * nu1;
  const double shrink = 1.0 + 2.0 * gamma * nu2;
  return x.unaryExpr([t, shrink](double v) { return soft(v, t) / shrink; });
}

Vector prox_box(const Vector& x, double gamma, const Vector& lo, const Vector& hi) {
  require_positive(gamma, "gamma");
  if (lo.size() != x.size() || hi.size() != x.size()) {
    throw DomainError("box bounds have the wrong dimension");
  }
  if ((lo.array() > hi.array()).any()) throw DomainError("box has lo > hi");
  return x.cwiseMax(lo).cwiseMin(hi);
}

ProxOperator::ProxOperator(std::string name, PhiFn phi, ProxFn prox, double rho)
    : name_(std::move(name)), phi_(std::move(phi)), prox_(std::move(prox)), rho_(rho) {
  if (rho_ < 0.0) throw ParameterError("weak-convexity constant rho must be >= 0");
}

ProxOperator ProxOperator::zero() {
  return ProxOperator(
      "none", [](const Vector&) { return ExtendedReal(0.0); },
      [](const Vector& x, double) { return x; });
}

ProxOperator ProxOperator::l1(double nu) {
  require_positive(nu, "nu");
  return ProxOperator(
      "l1", [nu](const Vector& x) { return ExtendedReal(nu * x.lpNorm<1>()); },
      [nu](const Vector& x, double gamma) { return prox_l1(x, gamma, nu); });
}

ProxOperator ProxOperator::elastic_net(double nu1, double nu2) {
  require_positive(nu1, "nu1");
  if (nu2 < 0.0) throw ParameterError("nu2 must be nonnegative");
  return ProxOperator(
      "elastic_net",
      [nu1, nu2](const Vector& x) {
        return ExtendedReal(nu1 * x.lpNorm<1>() + nu2 * x.squaredNorm());
      },
      [nu1, nu2](const Vector& x, double gamma) { return prox_elastic_net(x, gamma, nu1, nu2); });
}

ProxOperator ProxOperator::box(double lo, double hi) {
  if (lo > hi) throw DomainError("box has lo > hi");
  return ProxOperator(
      "box",
      [lo, hi](const Vector& x) {
        const bool inside = (x.array() >= lo).all() && (x.array() <= hi).all();
        return inside ? ExtendedReal(0.0) : ExtendedReal::infinity();
      },
      [lo, hi](const Vector& x, double) { return Vector(x.cwiseMax(lo).cwiseMin(hi)); });
}

ProxOperator ProxOperator::box(Vector lo, Vector hi) {
  if (lo.size() != hi.size()) throw DomainError("box bounds have mismatched sizes");
  if ((lo.array() > hi.array()).any()) throw DomainError("box has lo > hi");
  return ProxOperator(
      "box",
      [lo, hi](const Vector& x) {
        const bool inside = (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
        return inside ? ExtendedReal(0.0) : ExtendedReal::infinity();
      },
      [lo, hi](const Vector& x, double gamma) { return prox_box(x, gamma, lo, hi); });
}

void ProxOperator::check_gamma(double gamma) const {
  if (!(gamma > 0.0)) throw ParameterError("prox parameter must be positive");
  if (rho_ > 0.0 && !(gamma * rho_ < 1.0)) {
    throw ParameterError("prox parameter " + std::to_string(gamma) + " violates gamma < 1/rho = " +
                         std::to_string(1.0 / rho_));
  }
}

Vector ProxOperator::prox(const Vector& x, double gamma) const {
  check_gamma(gamma);
  return prox_(x, gamma);
}

void ProxOperator::prox_into(const Eigen::Ref<const Vector>& x, double gamma,
                             Eigen::Ref<Vector> out) const {
  out = prox_(Vector(x), gamma);
}

double ProxOperator::lipschitz_factor(double gamma) const {
  check_gamma(gamma);
  return 1.0 / (1.0 - gamma * rho_);
}

}  // namespace proxnet
