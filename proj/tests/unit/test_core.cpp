#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "proxnet/core.hpp"
#include "proxnet/rng.hpp"

using namespace proxnet;

namespace {

Vector random_vector(Index d, RngStream& rng, double scale = 1.0) {
  Vector v(d);
  for (Index j = 0; j < d; ++j) v[j] = scale * rng.normal();
  return v;
}

Matrix random_matrix(Index r, Index c, RngStream& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  return m;
}

double soft(double v, double t) { return v > t ? v - t : (v < -t ? v + t : 0.0); }

std::shared_ptr<QuadraticObjective> quad(Matrix q, Vector c) {
  return std::make_shared<QuadraticObjective>(std::move(q), std::move(c));
}

}  // namespace

TEST_CASE("normal_map") {
  RngStream rng(1);
  const auto bed = make_quadratic_testbed(1, 3, 2);
  const auto& f = *bed[0];
  const GradientFn grad = [&](const Vector& x) { return f.gradient(x); };

  SUBCASE("phi = 0 gives the gradient") {
    const Vector z = random_vector(3, rng);
    CHECK((normal_map(z, grad, ProxOperator::zero(), 0.3) - f.gradient(z)).norm() < 1e-14);
  }
  SUBCASE("vanishes at z* = x* - gamma grad f(x*) for a box-constrained quadratic") {
    Vector c(2);
    c << -3.0, 0.2;
    const auto q = quad(Matrix::Identity(2, 2), c);
    const GradientFn g = [&](const Vector& x) { return q->gradient(x); };
    // Unconstrained minimizer (3, -0.2); the box [-1, 1]^2 pins the first coordinate.
    Vector xstar(2);
    xstar << 1.0, -0.2;
    const double gamma = 0.25;
    const Vector zstar = xstar - gamma * g(xstar);
    const auto box = ProxOperator::box(-1.0, 1.0);
    CHECK((box.prox(zstar, gamma) - xstar).norm() < 1e-15);
    CHECK(normal_map(zstar, g, box, gamma).norm() < 1e-10);
  }
  SUBCASE("quadratic + l1 matches direct re-evaluation") {
    const double gamma = 0.2, nu = 0.3;
    const auto l1 = ProxOperator::l1(nu);
    const auto& qf = dynamic_cast<const QuadraticObjective&>(f);
    for (int t = 0; t < 20; ++t) {
      const Vector z = random_vector(3, rng);
      Vector x(3);
      for (Index j = 0; j < 3; ++j) x[j] = soft(z[j], gamma * nu);
      const Vector expect = qf.q() * x + qf.c() + (z - x) / gamma;
      CHECK((normal_map(z, grad, l1, gamma) - expect).norm() < 1e-12);
    }
  }
  SUBCASE("gamma outside (0, 1/rho)") {
    CHECK_THROWS_AS(normal_map(Vector::Zero(3), grad, ProxOperator::zero(), 0.0), ParameterError);
  }
}

TEST_CASE("agent_normal_map") {
  RngStream rng(3);
  SUBCASE("n = 1 equals the global normal map") {
    const CompositeProblem p(make_quadratic_testbed(1, 4, 4), ProxOperator::l1(0.1), 0.2);
    const Vector z = random_vector(4, rng);
    CHECK(agent_normal_map(p, z, 0) == normal_map(p, z));
  }
  SUBCASE("identical agents give identical maps") {
    const auto one = make_quadratic_testbed(1, 4, 5);
    const CompositeProblem p({one[0], one[0], one[0]}, ProxOperator::l1(0.1), 0.2);
    const Vector z = random_vector(4, rng);
    CHECK(agent_normal_map(p, z, 0) == agent_normal_map(p, z, 2));
    CHECK((agent_normal_map(p, z, 1) - normal_map(p, z)).norm() < 1e-14);
  }
}

TEST_CASE("natural_residual") {
  RngStream rng(6);
  SUBCASE("phi = 0 gives gamma grad f") {
    const auto bed = make_quadratic_testbed(1, 3, 7);
    const GradientFn g = [&](const Vector& x) { return bed[0]->gradient(x); };
    const Vector x = random_vector(3, rng);
    CHECK((natural_residual(x, g, ProxOperator::zero(), 0.4) - 0.4 * g(x)).norm() < 1e-14);
  }
  SUBCASE("interior minimizer of a box-constrained problem") {
    Vector c(2);
    c << -0.5, 0.25;
    const auto q = quad(Matrix::Identity(2, 2), c);
    const GradientFn g = [&](const Vector& x) { return q->gradient(x); };
    CHECK(natural_residual(q->minimizer(), g, ProxOperator::box(-1.0, 1.0), 0.3).norm() < 1e-15);
  }
  SUBCASE("1-D lasso fixed point") {
    // min 1/2 a x^2 + c x + nu |x|: x* = -sign(c) max(|c| - nu, 0) / a.
    const double a = 2.5, c = -1.7, nu = 0.4;
    const auto q = quad(Matrix::Constant(1, 1, a), Vector::Constant(1, c));
    const GradientFn g = [&](const Vector& x) { return q->gradient(x); };
    const Vector xstar = Vector::Constant(1, (std::abs(c) - nu) / a);
    for (double gamma : {0.01, 0.1, 0.39}) {
      CHECK(std::abs(natural_residual(xstar, g, ProxOperator::l1(nu), gamma)[0]) < 1e-10);
    }
  }
}

TEST_CASE("stationarity_measure") {
  RngStream rng(8);
  SUBCASE("all agents at a stationary point") {
    Vector c(2);
    c << -0.5, 0.25;
    const CompositeProblem p({quad(Matrix::Identity(2, 2), c)}, ProxOperator::box(-1.0, 1.0), 0.3);
    Matrix x(3, 2);
    for (Index i = 0; i < 3; ++i) x.row(i) = (-c).transpose();
    CHECK(stationarity_measure(x, p) < 1e-28);
  }
  SUBCASE("n = 1, phi = 0") {
    const auto bed = make_quadratic_testbed(1, 3, 9);
    const CompositeProblem p(bed, ProxOperator::zero(), 0.3);
    const Vector x = random_vector(3, rng);
    Matrix xm = x.transpose();
    CHECK(stationarity_measure(xm, p) == doctest::Approx(bed[0]->gradient(x).squaredNorm()));
  }
  SUBCASE("two random iterates, two agents, l1") {
    const auto bed = make_quadratic_testbed(2, 3, 10);
    const double gamma = 0.2, nu = 0.15;
    const CompositeProblem p(bed, ProxOperator::l1(nu), gamma);
    const auto& q0 = dynamic_cast<const QuadraticObjective&>(*bed[0]);
    const auto& q1 = dynamic_cast<const QuadraticObjective&>(*bed[1]);
    const Matrix qbar = 0.5 * (q0.q() + q1.q());
    const Vector cbar = 0.5 * (q0.c() + q1.c());
    const Matrix x = random_matrix(2, 3, rng);
    double expect = 0.0;
    for (Index i = 0; i < 2; ++i) {
      const Vector xi = x.row(i).transpose();
      const Vector step = xi - gamma * (qbar * xi + cbar);
      Vector r(3);
      for (Index j = 0; j < 3; ++j) r[j] = (xi[j] - soft(step[j], gamma * nu)) / gamma;
      expect += r.squaredNorm();
    }
    expect /= 2.0;
    CHECK(stationarity_measure(x, p, Exec::serial) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(stationarity_measure(x, p, Exec::parallel) == stationarity_measure(x, p, Exec::serial));
  }
}

TEST_CASE("lipschitz_LF") {
  CHECK(lipschitz_LF(1.0, 0.0, 0.1) == doctest::Approx(21.0));
  CHECK(lipschitz_LF(3.0, 0.0, 0.25) == doctest::Approx(3.0 + 2.0 / 0.25));
  CHECK(lipschitz_LF(2.0, 1.0, 0.5) == doctest::Approx((2.0 - 1.0 + 4.0) / 0.5));
  CHECK_THROWS_AS(lipschitz_LF(1.0, 2.0, 0.5), ParameterError);
}

TEST_CASE("normal map is L_F-Lipschitz") {
  RngStream rng(11);
  const CompositeProblem p(make_quadratic_testbed(4, 5, 12), ProxOperator::l1(0.2), 0.15);
  const double lf = lipschitz_LF(p.smoothness(), p.rho(), p.gamma());
  int violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const Vector a = random_vector(5, rng, 2.0);
    const Vector b = a + random_vector(5, rng, std::pow(10.0, -3.0 + 3.0 * rng.uniform()));
    if ((normal_map(p, a) - normal_map(p, b)).norm() > lf * (a - b).norm() * (1.0 + 1e-12)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("consensus_error") {
  RngStream rng(13);
  SUBCASE("equal rows") {
    Matrix z(4, 3);
    for (Index i = 0; i < 4; ++i) z.row(i) << 1.0, -2.0, 0.5;
    CHECK(consensus_error(z) == doctest::Approx(0.0));
  }
  SUBCASE("v and -v") {
    const Vector v = random_vector(3, rng);
    Matrix z(2, 3);
    z.row(0) = v.transpose();
    z.row(1) = -v.transpose();
    CHECK(consensus_error(z) == doctest::Approx(2.0 * v.squaredNorm()));
  }
  SUBCASE("pairwise double loop") {
    // sum_i ||z_i - zbar||^2 = (1 / 2n) sum_{i,j} ||z_i - z_j||^2.
    const Matrix z = random_matrix(7, 4, rng);
    double pair = 0.0;
    for (Index i = 0; i < 7; ++i)
      for (Index j = 0; j < 7; ++j) pair += (z.row(i) - z.row(j)).squaredNorm();
    CHECK(consensus_error(z) == doctest::Approx(pair / 14.0).epsilon(1e-12));
  }
}

TEST_CASE("stationarity is bounded by the normal map at the mean plus consensus") {
  RngStream rng(14);
  const Index n = 6, d = 4;
  const CompositeProblem p(make_quadratic_testbed(n, d, 15), ProxOperator::l1(0.1), 0.1);
  const double gr = 1.0 - p.gamma() * p.rho();
  const double lf = lipschitz_LF(p.smoothness(), p.rho(), p.gamma());
  for (int t = 0; t < 100; ++t) {
    const Matrix z = random_matrix(n, d, rng, 1.0 + 3.0 * rng.uniform());
    Matrix x(n, d);
    for (Index i = 0; i < n; ++i) x.row(i) = p.prox(z.row(i).transpose()).transpose();
    Vector zbar = Vector::Zero(d);
    for (Index i = 0; i < n; ++i) zbar += z.row(i).transpose();
    zbar /= static_cast<double>(n);
    const double lhs = stationarity_measure(x, p);
    const double rhs = 2.0 / (gr * gr) * normal_map(p, zbar).squaredNorm() +
                       2.0 * lf * lf / (n * gr * gr) * consensus_error(z);
    CHECK(lhs <= rhs * (1.0 + 1e-12));
  }
}

TEST_CASE("natural residual and normal map agree at prox-linked points") {
  RngStream rng(16);
  const CompositeProblem p(make_quadratic_testbed(3, 4, 17), ProxOperator::elastic_net(0.2, 0.1), 0.3);
  for (int t = 0; t < 50; ++t) {
    const Vector z = random_vector(4, rng, 2.0);
    const Vector x = p.prox(z);
    const Vector lhs = natural_residual(x, p.gradient_fn(), p.phi(), p.gamma());
    const Vector rhs = x - p.prox(z - p.gamma() * normal_map(p, z));
    CHECK((lhs - rhs).norm() < 1e-10);
  }
}

TEST_CASE("stochastic normal map is unbiased") {
  RngStream rng(18);
  const auto bed = make_quadratic_testbed(1, 3, 19, 1.0, 3.0, 1.0, 40, 1.0);
  const CompositeProblem p(bed, ProxOperator::l1(0.1), 0.2);
  const MinibatchSampler sampler(4, 20, 0);
  for (int t = 0; t < 5; ++t) {
    const Vector z = random_vector(3, rng);
    const Vector x = p.prox(z);
    const Vector exact = normal_map(p, z);
    Vector mean = Vector::Zero(3), sq = Vector::Zero(3);
    const int draws = 10000;
    for (int k = 0; k < draws; ++k) {
      const Vector v = sample_gradient(*bed[0], x, sampler, t * draws + k) + (z - x) / p.gamma();
      mean += v;
      sq += v.cwiseProduct(v);
    }
    mean /= draws;
    const Vector se = ((sq / draws - mean.cwiseProduct(mean)).cwiseMax(0.0) / draws).cwiseSqrt();
    for (Index j = 0; j < 3; ++j) CHECK(std::abs(mean[j] - exact[j]) <= 4.0 * se[j]);
  }
}

TEST_CASE("CompositeProblem validation and helpers") {
  const auto bed = make_quadratic_testbed(2, 3, 21);
  CHECK_THROWS_AS(CompositeProblem({}, ProxOperator::zero(), 0.1), ParameterError);
  CHECK_THROWS_AS(CompositeProblem(bed, ProxOperator::zero(), -1.0), ParameterError);
  const CompositeProblem p(bed, ProxOperator::l1(0.5), 0.1);
  CHECK(p.smoothness() == doctest::Approx(4.0));
  const Vector x = Vector::Ones(3);
  CHECK(p.objective(x).value() == doctest::Approx(p.smooth_value(x) + 1.5));
  CHECK(gamma_safety_bound(1.0, 0.0) == doctest::Approx(0.25));
  CHECK(gamma_safety_bound(1.0, 1.0) == doctest::Approx(0.125));
  CHECK(beta_exact_diffusion(0.81) == doctest::Approx(0.9));
  CHECK(beta_gradient_tracking(0.81) == 0.81);
}
