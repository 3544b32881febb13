#pragma once

#include <functional>
#include <limits>
#include <string>

#include "proxnet/common.hpp"

namespace proxnet {

/// Value of an extended-real function: finite, or +infinity outside its domain.
class ExtendedReal {
 public:
  constexpr ExtendedReal(double v) : value_(v), infinite_(false) {}  // NOLINT
  static constexpr ExtendedReal infinity() { return ExtendedReal(); }

  constexpr bool is_finite() const noexcept { return !infinite_; }
  /// Throws DomainError when infinite.
  double value() const;
  /// +inf as a double, for comparisons only.
  constexpr double as_double() const noexcept {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  friend ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
    if (a.infinite_ || b.infinite_) return infinity();
    return ExtendedReal(a.value_ + b.value_);
  }

 private:
  constexpr ExtendedReal() : value_(0.0), infinite_(true) {}
  double value_;
  bool infinite_;
};

// Closed-form proximal maps of gamma * phi.
Vector prox_zero(const Vector& x, double gamma);
Vector prox_l1(const Vector& x, double gamma, double nu);
Vector prox_elastic_net(const Vector& x, double gamma, double nu1, double nu2);
Vector prox_box(const Vector& x, double gamma, const Vector& lo, const Vector& hi);

/// A regularizer phi together with its proximal map and weak-convexity
/// constant rho. Shipped operators are convex (rho = 0); user-supplied ones may
/// be rho-weakly convex, in which case prox(x, gamma) requires gamma < 1/rho.
class ProxOperator {
 public:
  using PhiFn = std::function<ExtendedReal(const Vector&)>;
  using ProxFn = std::function<Vector(const Vector&, double)>;

  ProxOperator(std::string name, PhiFn phi, ProxFn prox, double rho = 0.0);

  static ProxOperator zero();
  static ProxOperator l1(double nu);
  static ProxOperator elastic_net(double nu1, double nu2);
  /// Scalar bounds applied to every coordinate.
  static ProxOperator box(double lo, double hi);
  static ProxOperator box(Vector lo, Vector hi);

  const std::string& name() const noexcept { return name_; }
  double rho() const noexcept { return rho_; }

  ExtendedReal phi(const Vector& x) const { return phi_(x); }
  Vector prox(const Vector& x, double gamma) const;
  /// Writes prox(x, gamma) into `out` without the parameter checks.
  void prox_into(const Eigen::Ref<const Vector>& x, double gamma, Eigen::Ref<Vector> out) const;

  /// Nonexpansiveness factor 1/(1 - gamma*rho).
  double lipschitz_factor(double gamma) const;
  void check_gamma(double gamma) const;

 private:
  std::string name_;
  PhiFn phi_;
  ProxFn prox_;
  double rho_;
};

}  // namespace proxnet
