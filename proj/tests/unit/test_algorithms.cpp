#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "proxnet/algorithms.hpp"
#include "proxnet/rng.hpp"

using namespace proxnet;

namespace {

struct Fixture {
  CompositeProblem problem;
  GradientSource grads;
  StepContext ctx;

  Fixture(Index n, Index d, Index batch, std::uint64_t seed, ProxOperator phi = ProxOperator::l1(0.05),
          double gamma = 0.1)
      : problem(make_quadratic_testbed(n, d, seed, 1.0, 4.0, 1.0, 32, 0.5), std::move(phi), gamma),
        grads(problem.objectives(), batch, seed + 1000),
        ctx{problem, grads, Exec::parallel} {}
};

Matrix random_matrix(Index r, Index c, std::uint64_t seed, double scale = 1.0) {
  RngStream rng(seed);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  return m;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

MixingMatrix lazy_ring(Index n) { return lazy(uniform_weights(build_ring(n))); }

MixingMatrix averaging(Index n) {
  return MixingMatrix::from_dense(Matrix::Constant(n, n, 1.0 / static_cast<double>(n)));
}

}  // namespace

TEST_CASE("framework matrices") {
  const MixingMatrix w = lazy_ring(6);
  SUBCASE("gradient tracking and exact diffusion pass the structural check") {
    CHECK(FrameworkMatrices::gradient_tracking(w).check().valid);
    CHECK(FrameworkMatrices::exact_diffusion(w).check().valid);
  }
  SUBCASE("B = 0 fails the null-space requirement") {
    const auto m = FrameworkMatrices::parse("A=W,B=0,C=I", w);
    CHECK_FALSE(m.check().valid);
  }
  SUBCASE("parse matches the named constructors") {
    const auto a = FrameworkMatrices::parse("A=W,B=I-W,C=W,d0=-WZ0", w);
    const auto b = FrameworkMatrices::gradient_tracking(w);
    CHECK(a.b().dense() == b.b().dense());
    CHECK(a.dual_init() == b.dual_init());
    CHECK_THROWS_AS(FrameworkMatrices::parse("A=X,B=0,C=I", w), ConfigError);
    CHECK_THROWS_AS(FrameworkMatrices::parse("A=W,C=I", w), ConfigError);
    CHECK_THROWS_AS(FrameworkMatrices::parse("A=W,B=0,C=I,Q=1", w), ConfigError);
  }
  SUBCASE("exact diffusion needs PSD W") {
    CHECK_THROWS_AS(FrameworkMatrices::exact_diffusion(uniform_weights(build_ring(6))), NumericError);
  }
}

TEST_CASE("degenerate framework A = C = I, B = 0") {
  Fixture fx(1, 3, 4, 1, ProxOperator::zero());
  const MixingMatrix one = averaging(1);
  const auto m = FrameworkMatrices::parse("A=I,B=0,C=I", one);
  const Matrix z0 = random_matrix(1, 3, 2);
  SUBCASE("n = 1, phi = 0 is plain SGD") {
    SwarmState s = init_unified(z0, m, fx.ctx);
    const Matrix g0 = s.g;
    step_unified(s, m, 0.1, fx.ctx);
    CHECK(max_abs(s.z - (z0 - 0.1 * g0)) < 1e-15);
  }
  SUBCASE("alpha = 0 leaves the state unchanged") {
    SwarmState s = init_unified(z0, m, fx.ctx);
    step_unified(s, m, 0.0, fx.ctx);
    CHECK(s.z == z0);
  }
}

TEST_CASE("specialisations match the unified engine under shared draws") {
  const Index n = 8, d = 5;
  const MixingMatrix w = lazy_ring(n);
  Fixture fx(n, d, 4, 3);
  const Matrix z0 = random_matrix(n, d, 4);
  const double alpha = 0.02;

  SUBCASE("norM-DSGT") {
    const auto m = FrameworkMatrices::gradient_tracking(w);
    SwarmState a = init_norm_dsgt(z0, fx.ctx);
    SwarmState b = init_unified(z0, m, fx.ctx);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      step_norm_dsgt(a, w, alpha, fx.ctx);
      step_unified(b, m, alpha, fx.ctx);
      worst = std::max(worst, max_abs(a.z - b.z));
    }
    CHECK(worst < 1e-10);
  }
  SUBCASE("norM-ED") {
    const auto m = FrameworkMatrices::exact_diffusion(w);
    SwarmState a = init_norm_ed(z0, fx.ctx);
    SwarmState b = init_unified(z0, m, fx.ctx);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      step_norm_ed(a, w, alpha, fx.ctx);
      step_unified(b, m, alpha, fx.ctx);
      worst = std::max(worst, max_abs(a.z - b.z));
    }
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("complete averaging collapses every method onto norM-CSGD") {
  const Index n = 5, d = 4;
  const MixingMatrix w = averaging(n);
  Fixture fx(n, d, 4, 5);
  RngStream rng(6);
  Vector z0(d);
  for (Index j = 0; j < d; ++j) z0[j] = rng.normal();
  const Matrix z_init = z0.transpose().replicate(n, 1);
  const double alpha = 0.05;

  CentralState c = init_central(z0, fx.ctx);
  SwarmState dsgt = init_norm_dsgt(z_init, fx.ctx);
  SwarmState ed = init_norm_ed(z_init, fx.ctx);
  const auto gt = FrameworkMatrices::gradient_tracking(w);
  SwarmState uni = init_unified(z_init, gt, fx.ctx);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    step_norm_csgd(c, alpha, fx.ctx);
    step_norm_dsgt(dsgt, w, alpha, fx.ctx);
    step_norm_ed(ed, w, alpha, fx.ctx);
    step_unified(uni, gt, alpha, fx.ctx);
    const Matrix ref = c.z.transpose().replicate(n, 1);
    worst = std::max({worst, max_abs(dsgt.z - ref), max_abs(ed.z - ref), max_abs(uni.z - ref)});
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("tracking identity along a norM-DSGT run") {
  const Index n = 8, d = 4;
  const MixingMatrix w = lazy_ring(n);
  Fixture fx(n, d, 4, 7);
  SwarmState s = init_norm_dsgt(random_matrix(n, d, 8), fx.ctx);
  double worst = 0.0;
  for (int k = 0; k <= 500; ++k) {
    const Vector ybar = s.y.colwise().mean().transpose();
    const Vector gbar = s.g.colwise().mean().transpose();
    const Vector zbar = s.z.colwise().mean().transpose();
    const Vector xbar = s.x.colwise().mean().transpose();
    worst = std::max(worst, (ybar - gbar - (zbar - xbar) / fx.problem.gamma()).cwiseAbs().maxCoeff());
    if (k < 500) step_norm_dsgt(s, w, 0.02, fx.ctx);
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("mean dynamics hold for every distributed method") {
  const Index n = 8, d = 4;
  const MixingMatrix w = lazy_ring(n);
  Fixture fx(n, d, 4, 9);
  const Matrix z0 = random_matrix(n, d, 10);
  const auto gt = FrameworkMatrices::gradient_tracking(w);
  const auto ed = FrameworkMatrices::exact_diffusion(w);
  double worst = 0.0;
  SwarmState a = init_norm_dsgt(z0, fx.ctx), b = init_norm_ed(z0, fx.ctx);
  SwarmState c = init_unified(z0, gt, fx.ctx), e = init_unified(z0, ed, fx.ctx);
  for (int k = 0; k < 200; ++k) {
    const double alpha = k < 100 ? 0.03 : 0.01;
    for (auto* s : {&a, &b, &c, &e}) {
      const SwarmState before = *s;
      if (s == &a) step_norm_dsgt(*s, w, alpha, fx.ctx);
      if (s == &b) step_norm_ed(*s, w, alpha, fx.ctx);
      if (s == &c) step_unified(*s, gt, alpha, fx.ctx);
      if (s == &e) step_unified(*s, ed, alpha, fx.ctx);
      worst = std::max(worst, mean_dynamics_residual(before, s->z, alpha, fx.problem.gamma()));
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("single agent reductions") {
  Fixture fx(1, 3, 4, 11);
  const MixingMatrix one = averaging(1);
  RngStream rng(12);
  Vector z0(3);
  for (Index j = 0; j < 3; ++j) z0[j] = rng.normal();
  CentralState c = init_central(z0, fx.ctx);
  SwarmState dsgt = init_norm_dsgt(z0.transpose(), fx.ctx);
  SwarmState ed = init_norm_ed(z0.transpose(), fx.ctx);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double alpha = k < 50 ? 0.05 : 0.02;
    step_norm_csgd(c, alpha, fx.ctx);
    step_norm_dsgt(dsgt, one, alpha, fx.ctx);
    step_norm_ed(ed, one, alpha, fx.ctx);
    worst = std::max({worst, max_abs(dsgt.z - c.z.transpose()), max_abs(ed.z - c.z.transpose())});
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("norM-ED with alpha = 0 and zero gradients extrapolates then mixes") {
  // f = 0 everywhere: a zero quadratic with c = 0.
  const Index n = 4;
  std::vector<ObjectivePtr> zero;
  for (Index i = 0; i < n; ++i)
    zero.push_back(std::make_shared<QuadraticObjective>(Matrix::Zero(2, 2), Vector::Zero(2)));
  const CompositeProblem p(zero, ProxOperator::zero(), 0.5);
  const GradientSource g(zero, 0, 1);
  const StepContext ctx{p, g, Exec::serial};
  const MixingMatrix w = lazy_ring(n);
  const Matrix z0 = random_matrix(n, 2, 13);
  SwarmState s = init_norm_ed(z0, ctx);
  step_norm_ed(s, w, 0.0, ctx);
  const Matrix z1 = s.z;
  CHECK(max_abs(z1 - w.dense() * z0) < 1e-15);
  step_norm_ed(s, w, 0.0, ctx);
  CHECK(max_abs(s.z - w.dense() * (2.0 * z1 - z0)) < 1e-14);
}

TEST_CASE("norM-DSGT rejects an uninitialised tracking variable") {
  Fixture fx(4, 2, 4, 14);
  SwarmState s = init_norm_ed(Matrix::Zero(4, 2), fx.ctx);
  CHECK_THROWS_AS(step_norm_dsgt(s, lazy_ring(4), 0.1, fx.ctx), StateError);
  CHECK_THROWS_AS(init_norm_ed(Matrix::Zero(3, 2), fx.ctx), StateError);
}

TEST_CASE("centralised baselines") {
  SUBCASE("norM-CSGD with full-batch gradients reaches stationarity") {
    Fixture fx(3, 4, 0, 15, ProxOperator::l1(0.3));
    CentralState s = init_central(Vector::Zero(4), fx.ctx);
    double stat = 1.0;
    int k = 0;
    for (; k < 5000 && stat >= 1e-8; ++k) {
      step_norm_csgd(s, 0.05, fx.ctx);
      stat = stationarity_measure(Matrix(s.x.transpose()), fx.problem);
    }
    CHECK(stat < 1e-8);
  }
  SUBCASE("Prox-CSGD and norM-CSGD reach the same objective") {
    Fixture fx(3, 4, 0, 16, ProxOperator::l1(0.3));
    CentralState a = init_central(Vector::Zero(4), fx.ctx);
    CentralState b = init_prox_csgd(Vector::Zero(4), fx.ctx);
    for (int k = 0; k < 3000; ++k) {
      step_norm_csgd(a, 0.05, fx.ctx);
      step_prox_csgd(b, 0.05, fx.ctx);
    }
    CHECK(std::abs(fx.problem.objective(a.x).value() - fx.problem.objective(b.x).value()) < 1e-6);
  }
  SUBCASE("Prox-CSGD with alpha = 0 is the identity") {
    Fixture fx(2, 3, 4, 17);
    const Vector x0 = Vector::Constant(3, 0.3);
    CentralState s = init_prox_csgd(x0, fx.ctx);
    step_prox_csgd(s, 0.0, fx.ctx);
    CHECK(s.x == x0);
  }
  SUBCASE("zero gradients with z = x is a fixed point") {
    std::vector<ObjectivePtr> zero{
        std::make_shared<QuadraticObjective>(Matrix::Zero(2, 2), Vector::Zero(2))};
    const CompositeProblem p(zero, ProxOperator::l1(0.1), 0.2);
    const GradientSource g(zero, 0, 1);
    const StepContext ctx{p, g, Exec::serial};
    CentralState s = init_central(Vector::Zero(2), ctx);
    step_norm_csgd(s, 0.5, ctx);
    CHECK(s.z == Vector::Zero(2));
  }
}

TEST_CASE("stationary consensus is a fixed point of the deterministic methods") {
  // Identical agents: grad f_i = grad f, so a stationary z* copied to every agent stays put.
  const Index n = 6;
  const auto one = make_quadratic_testbed(1, 3, 18);
  std::vector<ObjectivePtr> same(n, one[0]);
  const CompositeProblem p(same, ProxOperator::l1(0.2), 0.1);
  const GradientSource g(same, 0, 1);
  const StepContext ctx{p, g, Exec::parallel};
  CentralState c = init_central(Vector::Zero(3), ctx);
  for (int k = 0; k < 4000; ++k) step_norm_csgd(c, 0.05, ctx);
  const Matrix zstar = c.z.transpose().replicate(n, 1);
  const MixingMatrix w = lazy_ring(n);
  SwarmState a = init_norm_dsgt(zstar, ctx), b = init_norm_ed(zstar, ctx);
  for (int k = 0; k < 50; ++k) {
    step_norm_dsgt(a, w, 0.05, ctx);
    step_norm_ed(b, w, 0.05, ctx);
  }
  CHECK(max_abs(a.z - zstar) < 1e-10);
  CHECK(max_abs(b.z - zstar) < 1e-10);
}

TEST_CASE("mixing contracts the consensus error by at most lambda^2") {
  const Index n = 10;
  const MixingMatrix w = lazy_ring(n);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix z = random_matrix(n, 3, 100 + seed);
    const Matrix wz = w.dense() * z;
    CHECK(consensus_error(wz) <= w.lambda() * w.lambda() * consensus_error(z) * (1.0 + 1e-12));
  }
}

TEST_CASE("schedules and algorithm names") {
  SUBCASE("equal stages") {
    const auto s = StepsizeSchedule::equal_stages({0.1, 0.01, 0.001}, 10);
    CHECK(s.total() == 10);
    CHECK(s.at(0) == 0.1);
    CHECK(s.at(3) == 0.1);
    CHECK(s.at(4) == 0.01);
    CHECK(s.at(7) == 0.001);
    CHECK(s.at(100) == 0.001);
    CHECK(StepsizeSchedule::equal_stages({0.1, 0.2, 0.3}, 2).stages().size() == 2);
    CHECK_THROWS_AS(StepsizeSchedule({{0, 0.1}}), ConfigError);
  }
  SUBCASE("names") {
    CHECK(AlgorithmSpec::parse("norm-ed").kind == AlgorithmKind::norm_ed);
    CHECK(AlgorithmSpec::parse("unified:dsgt").unified == "dsgt");
    CHECK_FALSE(AlgorithmSpec::parse("prox-csgd").distributed());
    try {
      AlgorithmSpec::parse("bogus");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("norm-dsgt") != std::string::npos);
    }
  }
}

TEST_CASE("run") {
  const Index n = 6;
  Fixture fx(n, 3, 4, 19);
  const MixingMatrix w = lazy_ring(n);
  RunConfig cfg;
  cfg.algorithm = AlgorithmSpec::parse("norm-ed");
  cfg.iterations = 0;
  cfg.schedule = StepsizeSchedule::constant(0.02, 1);
  cfg.eval_every = 10;
  cfg.batch_size = 4;

  SUBCASE("K = 0 records only the initial evaluation") {
    const RunRecord r = run(cfg, fx.problem, w);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].iteration == 0);
  }
  SUBCASE("evaluation grid and determinism") {
    cfg.iterations = 95;
    cfg.schedule = StepsizeSchedule::equal_stages({0.02, 0.01}, 95);
    for (const char* name : {"norm-ed", "norm-dsgt", "norm-csgd", "prox-csgd", "unified:ed"}) {
      cfg.algorithm = AlgorithmSpec::parse(name);
      const RunRecord a = run(cfg, fx.problem, w);
      const RunRecord b = run(cfg, fx.problem, w);
      REQUIRE(a.rows.size() == 11);
      CHECK(a.rows.back().iteration == 95);
      for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].stationarity == b.rows[i].stationarity);
        CHECK(a.rows[i].consensus == b.rows[i].consensus);
        CHECK(a.rows[i].objective == b.rows[i].objective);
      }
      CHECK(a.meta("algorithm").value() == name);
    }
  }
  SUBCASE("serial and parallel runs agree") {
    cfg.iterations = 40;
    cfg.schedule = StepsizeSchedule::constant(0.02, 40);
    cfg.exec = Exec::serial;
    const RunRecord a = run(cfg, fx.problem, w);
    cfg.exec = Exec::parallel;
    const RunRecord b = run(cfg, fx.problem, w);
    CHECK(a.rows.back().stationarity == b.rows.back().stationarity);
  }
  SUBCASE("divergence names the iteration") {
    cfg.iterations = 5000;
    cfg.schedule = StepsizeSchedule::constant(50.0, 5000);
    try {
      run(cfg, fx.problem, w);
      FAIL("expected divergence");
    } catch (const RunDiverged& e) {
      CHECK(e.iteration() > 0);
      CHECK(std::string(e.what()).find(std::to_string(e.iteration())) != std::string::npos);
      CHECK(e.partial().abort_reason.has_value());
    }
  }
}
