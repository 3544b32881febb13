#include "proxnet/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "proxnet/rng.hpp"

namespace proxnet {

std::span<const Index> LocalObjective::all_indices() const {
  const Index n = num_samples();
  if (static_cast<Index>(all_.size()) != n) {
    all_.resize(n);
    std::iota(all_.begin(), all_.end(), Index{0});
  }
  return all_;
}

namespace {

void check_batch(std::span<const Index> batch, Index n) {
  if (batch.empty()) throw OracleError("empty minibatch");
  for (Index j : batch)
    if (j < 0 || j >= n) throw OracleError("minibatch index out of range");
}

void check_pm1(std::span<const int> labels) {
  for (int b : labels)
    if (b != 1 && b != -1) throw OracleError("tanh loss needs labels in {-1, +1}");
}

// Largest eigenvalue of (1/N) A^T A by power iteration.
double gram_lambda_max(const Matrix& a) {
  const Index d = a.cols();
  if (a.rows() == 0 || d == 0) return 0.0;
  Vector v = Vector::Ones(d) / std::sqrt(static_cast<double>(d));
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vector av = a * v;
    Vector w = a.transpose() * av / static_cast<double>(a.rows());
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / norm;
    if (std::abs(next - lambda) <= 1e-10 * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

}  // namespace

// --- tanh --------------------------------------------------------------------

double tanh_loss_value(const Vector& x, const Matrix& features, std::span<const int> labels) {
  if (features.rows() == 0) throw OracleError("tanh loss on an empty dataset");
  if (features.cols() != x.size()) throw OracleError("tanh loss: dimension mismatch");
  check_pm1(labels);
  double sum = 0.0;
  for (Index j = 0; j < features.rows(); ++j) {
    sum += 1.0 - std::tanh(labels[j] * features.row(j).dot(x));
  }
  return sum / static_cast<double>(features.rows());
}

Vector tanh_loss_grad(const Vector& x, const Matrix& features, std::span<const int> labels) {
  if (features.rows() == 0) throw OracleError("tanh loss on an empty dataset");
  if (features.cols() != x.size()) throw OracleError("tanh loss: dimension mismatch");
  check_pm1(labels);
  Vector g = Vector::Zero(x.size());
  for (Index j = 0; j < features.rows(); ++j) {
    const double t = std::tanh(labels[j] * features.row(j).dot(x));
    g -= ((1.0 - t * t) * labels[j]) * features.row(j).transpose();
  }
  return g / static_cast<double>(features.rows());
}

TanhLoss::TanhLoss(Dataset data) : data_(std::move(data)) {
  if (data_.size() == 0) throw OracleError("tanh loss on an empty dataset");
  check_pm1(data_.labels);
  // |d^2/dt^2 tanh(t)| <= 4 / (3 sqrt 3).
  smoothness_ = 4.0 / (3.0 * std::sqrt(3.0)) * gram_lambda_max(data_.features);
}

double TanhLoss::batch_value(const Vector& x, std::span<const Index> batch) const {
  check_batch(batch, num_samples());
  if (x.size() != dim()) throw OracleError("tanh loss: dimension mismatch");
  double sum = 0.0;
  for (Index j : batch) sum += 1.0 - std::tanh(data_.labels[j] * data_.features.row(j).dot(x));
  return sum / static_cast<double>(batch.size());
}

Vector TanhLoss::batch_gradient(const Vector& x, std::span<const Index> batch) const {
  check_batch(batch, num_samples());
  if (x.size() != dim()) throw OracleError("tanh loss: dimension mismatch");
  Vector g = Vector::Zero(x.size());
  for (Index j : batch) {
    const int b = data_.labels[j];
    const double t = std::tanh(b * data_.features.row(j).dot(x));
    g -= ((1.0 - t * t) * b) * data_.features.row(j).transpose();
  }
  return g / static_cast<double>(batch.size());
}

// --- MLP ---------------------------------------------------------------------

namespace {

LossAndGradient mlp_impl(const Vector& params, const Matrix& batch_x, std::span<const int> labels,
                         const MlpArch& arch) {
  using RowMat = Matrix;
  const Index h = arch.d_hidden, in = arch.d_in, out = arch.d_out;
  if (params.size() != arch.num_params()) {
    throw OracleError("MLP parameter vector has length " + std::to_string(params.size()) +
                      ", expected " + std::to_string(arch.num_params()));
  }
  if (batch_x.cols() != in) throw OracleError("MLP input dimension mismatch");
  const Index m = batch_x.rows();
  if (m == 0) throw OracleError("MLP evaluated on an empty batch");

  const double* p = params.data();
  Eigen::Map<const RowMat> w1(p, h, in);
  Eigen::Map<const Vector> b1(p + h * in, h);
  Eigen::Map<const RowMat> w2(p + h * (in + 1), out, h);
  Eigen::Map<const Vector> b2(p + h * (in + 1) + out * h, out);

  RowMat hidden = (batch_x * w1.transpose()).rowwise() + b1.transpose();
  hidden = hidden.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  RowMat logits = (hidden * w2.transpose()).rowwise() + b2.transpose();

  double loss = 0.0;
  RowMat dlogits(m, out);
  for (Index r = 0; r < m; ++r) {
    const int y = labels[r];
    if (y < 0 || y >= out) throw OracleError("MLP label out of range");
    const double mx = logits.row(r).maxCoeff();
    auto e = (logits.row(r).array() - mx).exp();
    const double z = e.sum();
    loss += std::log(z) + mx - logits(r, y);
    dlogits.row(r) = e / z;
    dlogits(r, y) -= 1.0;
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  loss *= inv_m;
  dlogits *= inv_m;

  LossAndGradient res;
  res.loss = loss;
  res.gradient.resize(params.size());
  double* g = res.gradient.data();
  Eigen::Map<RowMat> gw1(g, h, in);
  Eigen::Map<Vector> gb1(g + h * in, h);
  Eigen::Map<RowMat> gw2(g + h * (in + 1), out, h);
  Eigen::Map<Vector> gb2(g + h * (in + 1) + out * h, out);

  gw2 = dlogits.transpose() * hidden;
  gb2 = dlogits.colwise().sum().transpose();
  RowMat dpre = (dlogits * w2).array() * hidden.array() * (1.0 - hidden.array());
  gw1 = dpre.transpose() * batch_x;
  gb1 = dpre.colwise().sum().transpose();
  return res;
}

}  // namespace

LossAndGradient mlp_forward_backward(const Vector& params, const Matrix& features,
                                     std::span<const int> labels, const MlpArch& arch) {
  if (static_cast<Index>(labels.size()) != features.rows()) {
    throw OracleError("MLP: label count does not match sample count");
  }
  return mlp_impl(params, features, labels, arch);
}

MlpLoss::MlpLoss(Dataset data, MlpArch arch) : data_(std::move(data)), arch_(arch) {
  if (data_.size() == 0) throw OracleError("MLP loss on an empty dataset");
  if (arch_.d_in != data_.dim()) {
    throw OracleError("MLP d_in " + std::to_string(arch_.d_in) + " != feature dimension " +
                      std::to_string(data_.dim()));
  }
  if (arch_.d_hidden < 1 || arch_.d_out < 2) throw OracleError("MLP needs d_hidden >= 1, d_out >= 2");
  for (int y : data_.labels)
    if (y < 0 || y >= arch_.d_out) throw OracleError("MLP label out of range");
}

LossAndGradient MlpLoss::evaluate(const Vector& x, std::span<const Index> batch) const {
  check_batch(batch, num_samples());
  Matrix bx(static_cast<Index>(batch.size()), arch_.d_in);
  std::vector<int> by(batch.size());
  for (std::size_t r = 0; r < batch.size(); ++r) {
    bx.row(static_cast<Index>(r)) = data_.features.row(batch[r]);
    by[r] = data_.labels[batch[r]];
  }
  return mlp_impl(x, bx, by, arch_);
}

double MlpLoss::batch_value(const Vector& x, std::span<const Index> batch) const {
  return evaluate(x, batch).loss;
}

Vector MlpLoss::batch_gradient(const Vector& x, std::span<const Index> batch) const {
  return evaluate(x, batch).gradient;
}

double MlpLoss::smoothness() const { return std::numeric_limits<double>::quiet_NaN(); }

// --- quadratic ---------------------------------------------------------------

LossAndGradient quadratic_oracle(const Vector& x, const Matrix& q, const Vector& c) {
  if (q.rows() != q.cols() || q.rows() != c.size() || x.size() != c.size()) {
    throw OracleError("quadratic oracle: dimension mismatch");
  }
  LossAndGradient r;
  r.gradient = q * x + c;
  r.loss = 0.5 * x.dot(q * x) + c.dot(x);
  return r;
}

QuadraticObjective::QuadraticObjective(Matrix q, Vector c, Matrix perturbations)
    : q_(std::move(q)), c_(std::move(c)), noise_(std::move(perturbations)) {
  const Index p = c_.size();
  if (q_.rows() != p || q_.cols() != p) throw OracleError("quadratic: Q must be p x p");
  if ((q_ - q_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + q_.cwiseAbs().maxCoeff())) {
    throw OracleError("quadratic: Q is not symmetric");
  }
  if (noise_.size() > 0) {
    if (noise_.cols() != p) throw OracleError("quadratic: perturbations must have p columns");
    const Eigen::RowVectorXd mean = noise_.colwise().mean();
    noise_.rowwise() -= mean;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q_);
  const Vector& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -1e-10 * scale) throw OracleError("quadratic: Q is not PSD");
  smoothness_ = std::max(0.0, ev.maxCoeff());

  // Least-norm minimizer -Q^+ c; c must lie in range(Q) for f to be bounded below.
  const Matrix& u = es.eigenvectors();
  Vector uc = u.transpose() * c_;
  Vector coeff = Vector::Zero(p);
  for (Index k = 0; k < p; ++k)
    if (ev[k] > 1e-12 * scale) coeff[k] = -uc[k] / ev[k];
  minimizer_ = u * coeff;
  if ((q_ * minimizer_ + c_).norm() > 1e-8 * (1.0 + c_.norm())) {
    throw OracleError("quadratic: c is not in range(Q), objective unbounded below");
  }
  min_value_ = 0.5 * minimizer_.dot(q_ * minimizer_) + c_.dot(minimizer_);
}

double QuadraticObjective::batch_value(const Vector& x, std::span<const Index> batch) const {
  check_batch(batch, num_samples());
  if (x.size() != dim()) throw OracleError("quadratic: dimension mismatch");
  double v = 0.5 * x.dot(q_ * x) + c_.dot(x) - min_value_;
  if (noise_.rows() > 0) {
    double extra = 0.0;
    for (Index j : batch) extra += noise_.row(j).dot(x);
    v += extra / static_cast<double>(batch.size());
  }
  return v;
}

Vector QuadraticObjective::batch_gradient(const Vector& x, std::span<const Index> batch) const {
  check_batch(batch, num_samples());
  if (x.size() != dim()) throw OracleError("quadratic: dimension mismatch");
  Vector g = q_ * x + c_;
  if (noise_.rows() > 0) {
    Vector e = Vector::Zero(dim());
    for (Index j : batch) e += noise_.row(j).transpose();
    g += e / static_cast<double>(batch.size());
  }
  return g;
}

std::shared_ptr<QuadraticObjective> load_quadratic(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open quadratic spec '" + path + "'");
  std::stringstream clean;
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    clean << line << '\n';
  }
  std::string tok;
  Index p = 0;
  if (!(clean >> tok) || tok != "p" || !(clean >> p) || p < 1) {
    throw OracleError(path + ": expected 'p <dim>'");
  }
  Matrix q(p, p);
  Vector c(p);
  if (!(clean >> tok) || tok != "Q") throw OracleError(path + ": expected 'Q' block");
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j)
      if (!(clean >> q(i, j))) throw OracleError(path + ": truncated Q block");
  if (!(clean >> tok) || tok != "c") throw OracleError(path + ": expected 'c' block");
  for (Index i = 0; i < p; ++i)
    if (!(clean >> c[i])) throw OracleError(path + ": truncated c block");
  return std::make_shared<QuadraticObjective>(std::move(q), std::move(c));
}

std::vector<ObjectivePtr> make_quadratic_testbed(Index agents, Index dim, std::uint64_t seed,
                                                 double mu, double L, double c_scale,
                                                 Index samples, double noise) {
  if (agents < 1 || dim < 1) throw OracleError("testbed needs agents, dim >= 1");
  if (!(mu > 0.0) || L < mu) throw OracleError("testbed needs 0 < mu <= L");
  std::vector<ObjectivePtr> out;
  for (Index a = 0; a < agents; ++a) {
    RngStream rng(hash_combine(seed, static_cast<std::uint64_t>(a)));
    Eigen::MatrixXd g(dim, dim);
    for (Index i = 0; i < dim; ++i)
      for (Index j = 0; j < dim; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd basis = qr.householderQ();
    Vector spectrum(dim);
    for (Index i = 0; i < dim; ++i) {
      spectrum[i] = dim == 1 ? L : mu + (L - mu) * static_cast<double>(i) / (dim - 1);
    }
    Matrix q = basis * spectrum.asDiagonal() * basis.transpose();
    q = 0.5 * (q + q.transpose()).eval();
    Vector c(dim);
    for (Index i = 0; i < dim; ++i) c[i] = c_scale * rng.normal();
    Matrix e;
    if (samples > 0) {
      e.resize(samples, dim);
      for (Index s = 0; s < samples; ++s)
        for (Index i = 0; i < dim; ++i) e(s, i) = noise * rng.normal();
    }
    out.push_back(std::make_shared<QuadraticObjective>(std::move(q), std::move(c), std::move(e)));
  }
  return out;
}

// --- sampling ----------------------------------------------------------------

MinibatchSampler::MinibatchSampler(Index batch_size, std::uint64_t master_seed, Index agent,
                                   bool with_replacement)
    : batch_size_(batch_size),
      master_(master_seed),
      agent_(agent),
      with_replacement_(with_replacement) {
  if (batch_size_ < 1) throw OracleError("batch size must be positive");
}

std::vector<Index> MinibatchSampler::draw(Index n, std::uint64_t iteration) const {
  RngStream rng = stream_for(master_, static_cast<std::uint64_t>(agent_), iteration);
  std::vector<Index> idx;
  if (with_replacement_) {
    idx.resize(batch_size_);
    for (Index& j : idx) j = rng.below(n);
    return idx;
  }
  if (batch_size_ > n) throw OracleError("batch larger than dataset without replacement");
  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index t = 0; t < batch_size_; ++t) std::swap(perm[t], perm[t + rng.below(n - t)]);
  idx.assign(perm.begin(), perm.begin() + batch_size_);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Vector sample_gradient(const LocalObjective& obj, const Vector& x, const MinibatchSampler& sampler,
                       std::uint64_t iteration) {
  const auto batch = sampler.draw(obj.num_samples(), iteration);
  return obj.batch_gradient(x, batch);
}

GradientSource::GradientSource(std::vector<ObjectivePtr> agents, Index batch_size,
                               std::uint64_t master_seed)
    : agents_(std::move(agents)), batch_size_(batch_size) {
  if (agents_.empty()) throw OracleError("gradient source needs at least one agent");
  if (batch_size_ < 0) throw OracleError("batch size must be >= 0");
  if (batch_size_ > 0) {
    for (Index a = 0; a < static_cast<Index>(agents_.size()); ++a) {
      samplers_.emplace_back(batch_size_, master_seed, a);
    }
  }
}

Vector GradientSource::operator()(Index agent, const Vector& x, std::uint64_t iteration) const {
  const auto& obj = *agents_[agent];
  if (exact()) return obj.gradient(x);
  return sample_gradient(obj, x, samplers_[agent], iteration);
}

// --- ABC ---------------------------------------------------------------------

double minibatch_variance(const LocalObjective& obj, const Vector& x, Index batch_size) {
  if (batch_size < 1) throw OracleError("batch size must be positive");
  const Vector full = obj.gradient(x);
  double acc = 0.0;
  for (Index j = 0; j < obj.num_samples(); ++j) {
    const Index one[1] = {j};
    acc += (obj.batch_gradient(x, one) - full).squaredNorm();
  }
  return acc / static_cast<double>(obj.num_samples()) / static_cast<double>(batch_size);
}

ABCMeta fit_abc(const LocalObjective& obj, std::span<const Vector> points, Index batch_size) {
  if (points.empty()) throw OracleError("ABC fit needs calibration points");
  std::vector<double> gap, var;
  for (const Vector& x : points) {
    gap.push_back(std::max(0.0, obj.value(x) - obj.lower_bound()));
    var.push_back(minibatch_variance(obj, x, batch_size));
  }
  const double n = static_cast<double>(points.size());
  const double mg = std::accumulate(gap.begin(), gap.end(), 0.0) / n;
  const double mv = std::accumulate(var.begin(), var.end(), 0.0) / n;
  double sgg = 0.0, sgv = 0.0;
  for (std::size_t k = 0; k < gap.size(); ++k) {
    sgg += (gap[k] - mg) * (gap[k] - mg);
    sgv += (gap[k] - mg) * (var[k] - mv);
  }
  ABCMeta meta;
  meta.c0 = sgg > 0.0 ? std::max(0.0, sgv / sgg) : 0.0;
  double s2 = 0.0;
  for (std::size_t k = 0; k < gap.size(); ++k) s2 = std::max(s2, var[k] - meta.c0 * gap[k]);
  meta.sigma = std::sqrt(s2);
  return meta;
}

}  // namespace proxnet
