#include "proxnet/algorithms.hpp"

#include <cassert>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

namespace proxnet {

void RunRecord::set_meta(const std::string& key, const std::string& value) {
  for (auto& [k, v] : metadata) {
    if (k == key) {
      v = value;
      return;
    }
  }
  metadata.emplace_back(key, value);
}

std::optional<std::string> RunRecord::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return v;
  return std::nullopt;
}

// --- FrameworkMatrices -------------------------------------------------------

FrameworkMatrices::FrameworkMatrices(Matrix a, Matrix b, Matrix c, DualInit d0, Matrix w)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d0_(d0) {
  const Index n = a_.size();
  if (b_.size() != n || c_.size() != n) throw StateError("A, B, C must share one size");
  if (d0_ == DualInit::minus_w_z0) {
    if (w.rows() != n || w.cols() != n) throw StateError("d0 = -W Z0 needs W of matching size");
    w_ = LinearOperator(std::move(w));
  }
}

FrameworkMatrices FrameworkMatrices::gradient_tracking(const MixingMatrix& w) {
  const Index n = w.size();
  return FrameworkMatrices(w.dense(), Matrix::Identity(n, n) - w.dense(), w.dense(),
                           DualInit::minus_w_z0, w.dense());
}

FrameworkMatrices FrameworkMatrices::exact_diffusion(const MixingMatrix& w) {
  const Index n = w.size();
  return FrameworkMatrices(w.dense(), sqrt_I_minus_W(w), Matrix::Identity(n, n), DualInit::zero);
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

Matrix polynomial_token(const std::string& tok, const MixingMatrix& w, const char* which) {
  const Index n = w.size();
  if (tok == "I") return Matrix::Identity(n, n);
  if (tok == "W") return w.dense();
  if (tok == "W2") return w.dense() * w.dense();
  throw ConfigError(std::string("unified: ") + which + " must be I, W or W2, got '" + tok + "'");
}

}  // namespace

FrameworkMatrices FrameworkMatrices::parse(const std::string& spec, const MixingMatrix& w) {
  const std::string s = trim(spec);
  if (s == "dsgt") return gradient_tracking(w);
  if (s == "ed") return exact_diffusion(w);

  std::map<std::string, std::string> kv;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("unified: expected key=value, got '" + item + "'");
    const std::string key = trim(item.substr(0, eq));
    if (key != "A" && key != "B" && key != "C" && key != "d0") {
      throw ConfigError("unified: unknown key '" + key + "' (valid: A, B, C, d0)");
    }
    kv[key] = trim(item.substr(eq + 1));
  }
  for (const char* key : {"A", "B", "C"}) {
    if (!kv.count(key)) throw ConfigError(std::string("unified: missing ") + key);
  }
  const Index n = w.size();
  Matrix a = polynomial_token(kv["A"], w, "A");
  Matrix c = polynomial_token(kv["C"], w, "C");
  Matrix b;
  if (kv["B"] == "0") {
    b = Matrix::Zero(n, n);
  } else if (kv["B"] == "I-W") {
    b = Matrix::Identity(n, n) - w.dense();
  } else if (kv["B"] == "sqrt(I-W)") {
    b = sqrt_I_minus_W(w);
  } else {
    throw ConfigError("unified: B must be 0, I-W or sqrt(I-W), got '" + kv["B"] + "'");
  }
  DualInit d0 = DualInit::zero;
  if (kv.count("d0")) {
    if (kv["d0"] == "-WZ0") {
      d0 = DualInit::minus_w_z0;
    } else if (kv["d0"] != "0") {
      throw ConfigError("unified: d0 must be 0 or -WZ0, got '" + kv["d0"] + "'");
    }
  }
  return FrameworkMatrices(std::move(a), std::move(b), std::move(c), d0, w.dense());
}

Matrix FrameworkMatrices::initial_dual(const Matrix& z0, Exec exec) const {
  if (d0_ == DualInit::zero) return Matrix::Zero(z0.rows(), z0.cols());
  return -w_.apply(z0, exec);
}

FrameworkMatrices::Diagnostics FrameworkMatrices::check() const {
  Diagnostics d;
  const Index n = a_.size();
  auto stoch = [](const Matrix& m) {
    const double r = (m.rowwise().sum().array() - 1.0).abs().maxCoeff();
    const double c = (m.colwise().sum().array() - 1.0).abs().maxCoeff();
    return std::max(r, c);
  };
  d.a_stochastic_error = stoch(a_.dense());
  d.c_stochastic_error = stoch(c_.dense());
  d.b_ones_norm = (b_.dense() * Vector::Ones(n)).norm();
  if (n > 1) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b_.dense());
    d.b_second_singular = svd.singularValues()[n - 2];
  }
  d.valid = d.a_stochastic_error <= 1e-12 && d.c_stochastic_error <= 1e-12 &&
            d.b_ones_norm < 1e-10 && (n == 1 || d.b_second_singular > 1e-12);
  return d;
}

// --- steps -------------------------------------------------------------------

namespace {

void require_rows(const Matrix& m, Index n, const char* what) {
  if (m.rows() != n) {
    throw StateError(std::string(what) + " has " + std::to_string(m.rows()) + " rows, expected " +
                     std::to_string(n));
  }
}

// Fresh gradients and normal directions at the current X, stream s.k.
void refresh(SwarmState& s, const StepContext& ctx) {
  kernels::agent_gradients(ctx.grads, s.x, static_cast<std::uint64_t>(s.k), s.g, ctx.exec);
  s.h = kernels::normal_directions(s.g, s.z, s.x, ctx.problem.gamma());
}

SwarmState init_common(const Matrix& z0, const StepContext& ctx) {
  require_rows(z0, ctx.grads.agents(), "Z0");
  if (z0.cols() != ctx.problem.dim()) throw StateError("Z0 has the wrong dimension");
  SwarmState s;
  s.z = z0;
  kernels::prox_rows(ctx.problem.phi(), s.z, ctx.problem.gamma(), s.x, ctx.exec);
  s.k = 0;
  refresh(s, ctx);
  return s;
}

#ifndef NDEBUG
void debug_check_mean(const SwarmState& before, const Matrix& z_after, double alpha, double gamma) {
  if (!z_after.allFinite() || !before.h.allFinite()) return;
  auto mag = [](const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); };
  const double res = mean_dynamics_residual(before, z_after, alpha, gamma);
  const double scale = 1.0 + mag(before.z) + mag(z_after) + mag(before.z_prev) +
                       alpha * (mag(before.h) + mag(before.y)) + before.alpha_prev * mag(before.h_prev);
  assert(res <= 1e-12 * scale * std::sqrt(static_cast<double>(before.k + 1)));
  (void)res;
  (void)scale;
}
#endif

}  // namespace

double mean_dynamics_residual(const SwarmState& before, const Matrix& after_z, double alpha,
                              double gamma) {
  const Vector zbar = kernels::row_mean(before.z);
  const Vector xbar = kernels::row_mean(before.x);
  const Vector gbar = kernels::row_mean(before.g);
  const Vector expected = zbar - alpha * (gbar + (zbar - xbar) / gamma);
  return (kernels::row_mean(after_z) - expected).cwiseAbs().maxCoeff();
}

SwarmState init_unified(const Matrix& z0, const FrameworkMatrices& m, const StepContext& ctx) {
  if (m.a().size() != z0.rows()) throw StateError("framework size does not match agent count");
  SwarmState s = init_common(z0, ctx);
  s.d = m.initial_dual(z0, ctx.exec);
  return s;
}

void step_unified(SwarmState& s, const FrameworkMatrices& m, double alpha, const StepContext& ctx) {
  const Index n = s.agents();
  require_rows(s.x, n, "X");
  require_rows(s.d, n, "D");
  require_rows(s.g, n, "G");
  if (m.a().size() != n) throw StateError("framework size does not match agent count");
#ifndef NDEBUG
  const SwarmState before = s;
#endif
  Matrix inner = m.c().apply(s.z, ctx.exec) - alpha * s.h;
  Matrix z_next = m.a().apply(inner, ctx.exec) - m.b().apply(s.d, ctx.exec);
  s.d += m.b().apply(z_next, ctx.exec);
  s.z = std::move(z_next);
  kernels::prox_rows(ctx.problem.phi(), s.z, ctx.problem.gamma(), s.x, ctx.exec);
  ++s.k;
  refresh(s, ctx);
#ifndef NDEBUG
  debug_check_mean(before, s.z, alpha, ctx.problem.gamma());
#endif
}

SwarmState init_norm_dsgt(const Matrix& z0, const StepContext& ctx) {
  SwarmState s = init_common(z0, ctx);
  s.y = s.h;
  return s;
}

void step_norm_dsgt(SwarmState& s, const MixingMatrix& w, double alpha, const StepContext& ctx) {
  const Index n = s.agents();
  if (s.y.rows() == 0) throw StateError("norM-DSGT tracking variable is uninitialized");
  require_rows(s.y, n, "Y");
  require_rows(s.h, n, "H");
  if (w.size() != n) throw StateError("mixing matrix size does not match agent count");
#ifndef NDEBUG
  const SwarmState before = s;
#endif
  const Matrix half = s.z - alpha * s.y;
  Matrix mixed_y = w.op().apply(s.y, ctx.exec);
  s.z = w.op().apply(half, ctx.exec);
  kernels::prox_rows(ctx.problem.phi(), s.z, ctx.problem.gamma(), s.x, ctx.exec);
  const Matrix h_old = std::move(s.h);
  ++s.k;
  refresh(s, ctx);
  s.y = mixed_y + s.h - h_old;
#ifndef NDEBUG
  debug_check_mean(before, s.z, alpha, ctx.problem.gamma());
#endif
}

SwarmState init_norm_ed(const Matrix& z0, const StepContext& ctx) { return init_common(z0, ctx); }

void step_norm_ed(SwarmState& s, const MixingMatrix& w, double alpha, const StepContext& ctx) {
  const Index n = s.agents();
  require_rows(s.h, n, "H");
  if (w.size() != n) throw StateError("mixing matrix size does not match agent count");
#ifndef NDEBUG
  const SwarmState before = s;
#endif
  Matrix half;
  if (s.k == 0 || s.z_prev.rows() == 0) {
    half = s.z - alpha * s.h;
  } else {
    require_rows(s.z_prev, n, "Z_prev");
    half = 2.0 * s.z - s.z_prev - alpha * s.h + s.alpha_prev * s.h_prev;
  }
  s.z_prev = s.z;
  s.h_prev = s.h;
  s.alpha_prev = alpha;
  s.z = w.op().apply(half, ctx.exec);
  kernels::prox_rows(ctx.problem.phi(), s.z, ctx.problem.gamma(), s.x, ctx.exec);
  ++s.k;
  refresh(s, ctx);
#ifndef NDEBUG
  debug_check_mean(before, s.z, alpha, ctx.problem.gamma());
#endif
}

namespace {

Vector average_gradient(const Vector& x, std::int64_t k, const StepContext& ctx) {
  const Index n = ctx.grads.agents();
  Matrix stacked = x.transpose().replicate(n, 1);
  Matrix g;
  kernels::agent_gradients(ctx.grads, stacked, static_cast<std::uint64_t>(k), g, ctx.exec);
  return kernels::row_mean(g);
}

}  // namespace

CentralState init_central(const Vector& z0, const StepContext& ctx) {
  if (z0.size() != ctx.problem.dim()) throw StateError("z0 has the wrong dimension");
  CentralState s;
  s.z = z0;
  s.x = ctx.problem.prox(z0);
  s.k = 0;
  s.g = average_gradient(s.x, 0, ctx);
  return s;
}

void step_norm_csgd(CentralState& s, double alpha, const StepContext& ctx) {
  const double gamma = ctx.problem.gamma();
  s.z = s.z - alpha * (s.g + (s.z - s.x) / gamma);
  s.x = ctx.problem.prox(s.z);
  ++s.k;
  s.g = average_gradient(s.x, s.k, ctx);
}

CentralState init_prox_csgd(const Vector& x0, const StepContext& ctx) {
  if (x0.size() != ctx.problem.dim()) throw StateError("x0 has the wrong dimension");
  CentralState s;
  s.x = x0;
  s.z = x0;
  s.k = 0;
  s.g = average_gradient(s.x, 0, ctx);
  return s;
}

void step_prox_csgd(CentralState& s, double alpha, const StepContext& ctx) {
  if (alpha == 0.0) {
    ++s.k;
    s.g = average_gradient(s.x, s.k, ctx);
    return;
  }
  s.x = ctx.problem.phi().prox(s.x - alpha * s.g, alpha);
  s.z = s.x;
  ++s.k;
  s.g = average_gradient(s.x, s.k, ctx);
}

// --- algorithm names and schedules -------------------------------------------

const std::vector<std::string>& algorithm_names() {
  static const std::vector<std::string> names = {"norm-dsgt", "norm-ed", "norm-csgd", "prox-csgd",
                                                 "unified:<A,B,C spec>"};
  return names;
}

AlgorithmSpec AlgorithmSpec::parse(const std::string& name) {
  AlgorithmSpec s;
  if (name == "norm-dsgt") {
    s.kind = AlgorithmKind::norm_dsgt;
  } else if (name == "norm-ed") {
    s.kind = AlgorithmKind::norm_ed;
  } else if (name == "norm-csgd") {
    s.kind = AlgorithmKind::norm_csgd;
  } else if (name == "prox-csgd") {
    s.kind = AlgorithmKind::prox_csgd;
  } else if (name.rfind("unified:", 0) == 0 && name.size() > 8) {
    s.kind = AlgorithmKind::unified;
    s.unified = name.substr(8);
  } else {
    std::string valid;
    for (const auto& n : algorithm_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown algorithm '" + name + "' (valid: " + valid + ")");
  }
  return s;
}

std::string AlgorithmSpec::name() const {
  switch (kind) {
    case AlgorithmKind::norm_dsgt: return "norm-dsgt";
    case AlgorithmKind::norm_ed: return "norm-ed";
    case AlgorithmKind::norm_csgd: return "norm-csgd";
    case AlgorithmKind::prox_csgd: return "prox-csgd";
    case AlgorithmKind::unified: return "unified:" + unified;
  }
  return "?";
}

bool AlgorithmSpec::distributed() const {
  return kind == AlgorithmKind::norm_dsgt || kind == AlgorithmKind::norm_ed ||
         kind == AlgorithmKind::unified;
}

StepsizeSchedule::StepsizeSchedule(std::vector<Stage> stages) : stages_(std::move(stages)) {
  for (const auto& st : stages_) {
    if (st.duration <= 0) throw ConfigError("stepsize stage durations must be positive");
    if (!(st.alpha >= 0.0) || !std::isfinite(st.alpha)) {
      throw ConfigError("stepsizes must be finite and nonnegative");
    }
  }
}

StepsizeSchedule StepsizeSchedule::equal_stages(const std::vector<double>& alphas,
                                                std::int64_t total) {
  if (alphas.empty()) throw ConfigError("need at least one stepsize");
  if (total < 0) throw ConfigError("iteration count must be nonnegative");
  const auto s = static_cast<std::int64_t>(alphas.size());
  std::vector<Stage> stages;
  for (std::int64_t i = 0; i < s; ++i) {
    const std::int64_t len = total / s + (i < total % s ? 1 : 0);
    if (len > 0) stages.push_back({len, alphas[i]});
  }
  return StepsizeSchedule(std::move(stages));
}

StepsizeSchedule StepsizeSchedule::constant(double alpha, std::int64_t total) {
  return equal_stages({alpha}, total);
}

double StepsizeSchedule::at(std::int64_t k) const {
  if (stages_.empty()) throw ConfigError("empty stepsize schedule");
  std::int64_t end = 0;
  for (const auto& st : stages_) {
    end += st.duration;
    if (k < end) return st.alpha;
  }
  return stages_.back().alpha;
}

std::int64_t StepsizeSchedule::total() const noexcept {
  std::int64_t t = 0;
  for (const auto& st : stages_) t += st.duration;
  return t;
}

// --- run -----------------------------------------------------------------------

RunDiverged::RunDiverged(std::int64_t iteration, RunRecord partial)
    : DivergedError("iterate diverged (non-finite) at iteration " + std::to_string(iteration),
                    iteration),
      partial_(std::move(partial)) {}

RunRecord run(const RunConfig& config, const CompositeProblem& problem, const MixingMatrix& w) {
  if (config.iterations < 0) throw ConfigError("K must be nonnegative");
  if (config.eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (config.iterations > 0 && config.schedule.stages().empty()) {
    throw ConfigError("missing stepsize schedule");
  }
  const Index n = problem.agents();
  const Index p = problem.dim();
  if (w.size() != n) throw ConfigError("mixing matrix size does not match agent count");
  Vector z0 = config.z0.size() == 0 ? Vector::Zero(p) : config.z0;
  if (z0.size() != p) throw ConfigError("initial point has the wrong dimension");

  const GradientSource grads(problem.objectives(), config.batch_size, config.seed);
  const StepContext ctx{problem, grads, config.exec};
  const auto start = std::chrono::steady_clock::now();

  RunRecord rec;
  rec.set_meta("algorithm", config.algorithm.name());
  rec.set_meta("seed", std::to_string(config.seed));

  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  auto evaluate_swarm = [&](std::int64_t k, const Matrix& z, const Matrix& x) {
    MetricRow row;
    row.iteration = k;
    row.stationarity = stationarity_measure(x, problem, config.exec);
    row.consensus = consensus_error(z);
    row.objective = problem.objective(kernels::row_mean(x)).as_double();
    row.seconds = elapsed();
    rec.rows.push_back(row);
  };
  auto evaluate_central = [&](std::int64_t k, const Vector& x) {
    MetricRow row;
    row.iteration = k;
    row.stationarity = stationarity_measure(Matrix(x.transpose()), problem, config.exec);
    row.consensus = 0.0;
    row.objective = problem.objective(x).as_double();
    row.seconds = elapsed();
    rec.rows.push_back(row);
  };
  auto due = [&](std::int64_t k) { return k % config.eval_every == 0 || k == config.iterations; };

  const AlgorithmKind kind = config.algorithm.kind;
  if (config.algorithm.distributed()) {
    const Matrix z_init = z0.transpose().replicate(n, 1);
    std::optional<FrameworkMatrices> framework;
    SwarmState s;
    if (kind == AlgorithmKind::unified) {
      framework.emplace(FrameworkMatrices::parse(config.algorithm.unified, w));
      s = init_unified(z_init, *framework, ctx);
    } else if (kind == AlgorithmKind::norm_dsgt) {
      s = init_norm_dsgt(z_init, ctx);
    } else {
      s = init_norm_ed(z_init, ctx);
    }
    evaluate_swarm(0, s.z, s.x);
    for (std::int64_t k = 0; k < config.iterations; ++k) {
      const double alpha = config.schedule.at(k);
      if (kind == AlgorithmKind::unified) {
        step_unified(s, *framework, alpha, ctx);
      } else if (kind == AlgorithmKind::norm_dsgt) {
        step_norm_dsgt(s, w, alpha, ctx);
      } else {
        step_norm_ed(s, w, alpha, ctx);
      }
      if (!s.z.allFinite() || !s.x.allFinite()) {
        rec.abort_reason = "diverged at iteration " + std::to_string(k + 1);
        throw RunDiverged(k + 1, rec);
      }
      if (due(k + 1)) evaluate_swarm(k + 1, s.z, s.x);
    }
  } else {
    CentralState s = kind == AlgorithmKind::norm_csgd ? init_central(z0, ctx)
                                                      : init_prox_csgd(problem.prox(z0), ctx);
    evaluate_central(0, s.x);
    for (std::int64_t k = 0; k < config.iterations; ++k) {
      const double alpha = config.schedule.at(k);
      if (kind == AlgorithmKind::norm_csgd) {
        step_norm_csgd(s, alpha, ctx);
      } else {
        step_prox_csgd(s, alpha, ctx);
      }
      if (!s.z.allFinite() || !s.x.allFinite()) {
        rec.abort_reason = "diverged at iteration " + std::to_string(k + 1);
        throw RunDiverged(k + 1, rec);
      }
      if (due(k + 1)) evaluate_central(k + 1, s.x);
    }
  }
  return rec;
}

}  // namespace proxnet
