#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "proxnet/common.hpp"
#include "proxnet/core.hpp"
#include "proxnet/kernels.hpp"
#include "proxnet/mixing.hpp"
#include "proxnet/oracle.hpp"
#include "proxnet/record.hpp"

namespace proxnet {

/// The (A, B, C, d_0) choice that instantiates the unified recursion
///   Z+ = A (C Z - alpha [G + (Z - X)/gamma]) - B D,  D+ = D + B Z+,  X+ = prox(Z+).
class FrameworkMatrices {
 public:
  enum class DualInit { zero, minus_w_z0 };

  FrameworkMatrices(Matrix a, Matrix b, Matrix c, DualInit d0, Matrix w = {});

  /// A = W, B = I - W, C = W, d_0 = -W Z_0.
  static FrameworkMatrices gradient_tracking(const MixingMatrix& w);
  /// A = W, B = (I - W)^{1/2}, C = I, d_0 = 0. Needs W positive semidefinite.
  static FrameworkMatrices exact_diffusion(const MixingMatrix& w);
  /// "dsgt", "ed", or "A=<I|W|W2>,B=<0|I-W|sqrt(I-W)>,C=<I|W|W2>[,d0=<0|-WZ0>]".
  static FrameworkMatrices parse(const std::string& spec, const MixingMatrix& w);

  const LinearOperator& a() const noexcept { return a_; }
  const LinearOperator& b() const noexcept { return b_; }
  const LinearOperator& c() const noexcept { return c_; }
  DualInit dual_init() const noexcept { return d0_; }
  Matrix initial_dual(const Matrix& z0, Exec exec) const;

  struct Diagnostics {
    double a_stochastic_error = 0.0;
    double c_stochastic_error = 0.0;
    double b_ones_norm = 0.0;        // ||B 1||
    double b_second_singular = 0.0;  // sigma_{n-1}(B)
    bool valid = false;
  };
  /// Checks double stochasticity of A and C (1e-12) and null(B) = span(1).
  Diagnostics check() const;

 private:
  LinearOperator a_, b_, c_;
  DualInit d0_;
  LinearOperator w_;
};

/// Stacked iterates of n agents. After initialisation and after every step
/// G holds the stochastic gradients at X drawn from stream k, and
/// H = G + (Z - X)/gamma.
struct SwarmState {
  Matrix z, x, g, h;
  Matrix y;       // tracking variable (norM-DSGT)
  Matrix d;       // dual accumulator (unified engine)
  Matrix z_prev;  // previous iterate (norM-ED)
  Matrix h_prev;
  double alpha_prev = 0.0;
  std::int64_t k = 0;

  Index agents() const noexcept { return z.rows(); }
};

/// Single-server state for the centralized baselines; g is the average of
/// the n agents' stochastic gradients at x.
struct CentralState {
  Vector z, x, g;
  std::int64_t k = 0;
};

struct StepContext {
  const CompositeProblem& problem;
  const GradientSource& grads;
  Exec exec = Exec::parallel;
};

SwarmState init_unified(const Matrix& z0, const FrameworkMatrices& m, const StepContext& ctx);
void step_unified(SwarmState& s, const FrameworkMatrices& m, double alpha, const StepContext& ctx);

SwarmState init_norm_dsgt(const Matrix& z0, const StepContext& ctx);
void step_norm_dsgt(SwarmState& s, const MixingMatrix& w, double alpha, const StepContext& ctx);

SwarmState init_norm_ed(const Matrix& z0, const StepContext& ctx);
/// Uses alpha for the k-term and the previous step's alpha for the (k-1)-term.
void step_norm_ed(SwarmState& s, const MixingMatrix& w, double alpha, const StepContext& ctx);

CentralState init_central(const Vector& z0, const StepContext& ctx);
/// z+ = z - alpha [gbar + (z - x)/gamma], x+ = prox_{gamma phi}(z+).
void step_norm_csgd(CentralState& s, double alpha, const StepContext& ctx);
/// x+ = prox_{alpha phi}(x - alpha gbar).
CentralState init_prox_csgd(const Vector& x0, const StepContext& ctx);
void step_prox_csgd(CentralState& s, double alpha, const StepContext& ctx);

/// max |zbar+ - (zbar - alpha [gbar + (zbar - xbar)/gamma])| for one step
/// from `before` to `after_z`.
double mean_dynamics_residual(const SwarmState& before, const Matrix& after_z, double alpha,
                              double gamma);

// --- run configuration -------------------------------------------------------

enum class AlgorithmKind { norm_dsgt, norm_ed, norm_csgd, prox_csgd, unified };

struct AlgorithmSpec {
  AlgorithmKind kind = AlgorithmKind::norm_ed;
  std::string unified;  // framework spec for AlgorithmKind::unified

  /// "norm-dsgt" | "norm-ed" | "norm-csgd" | "prox-csgd" | "unified:<spec>".
  static AlgorithmSpec parse(const std::string& name);
  std::string name() const;
  bool distributed() const;
};

/// Names accepted by AlgorithmSpec::parse (the unified form as a pattern).
const std::vector<std::string>& algorithm_names();

/// Piecewise-constant stepsizes.
class StepsizeSchedule {
 public:
  struct Stage {
    std::int64_t duration;
    double alpha;
  };

  StepsizeSchedule() = default;
  explicit StepsizeSchedule(std::vector<Stage> stages);
  /// Splits K into equal stages (the first K mod s stages one longer).
  static StepsizeSchedule equal_stages(const std::vector<double>& alphas, std::int64_t total);
  static StepsizeSchedule constant(double alpha, std::int64_t total);

  /// Stepsize of iteration k; iterations past the end keep the last value.
  double at(std::int64_t k) const;
  std::int64_t total() const noexcept;
  const std::vector<Stage>& stages() const noexcept { return stages_; }

 private:
  std::vector<Stage> stages_;
};

struct RunConfig {
  AlgorithmSpec algorithm;
  std::int64_t iterations = 0;
  StepsizeSchedule schedule;
  std::uint64_t seed = 1;
  std::int64_t eval_every = 10;
  Index batch_size = 16;  // 0 = exact gradients
  Vector z0;              // shared initial point; empty means zero
  Exec exec = Exec::parallel;
};

/// Thrown when an iterate becomes non-finite; carries the trace so far.
class RunDiverged : public DivergedError {
 public:
  RunDiverged(std::int64_t iteration, RunRecord partial);
  const RunRecord& partial() const noexcept { return partial_; }

 private:
  RunRecord partial_;
};

/// Runs K iterations, evaluating metrics at k = 0, every eval_every, and K.
/// Deterministic given the seed (timing column aside).
RunRecord run(const RunConfig& config, const CompositeProblem& problem, const MixingMatrix& w);

}  // namespace proxnet
