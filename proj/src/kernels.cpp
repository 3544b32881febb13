#include "proxnet/kernels.hpp"

namespace proxnet {

SparseRows SparseRows::from_dense(const Matrix& m) {
  SparseRows s;
  s.cols = m.cols();
  s.rows.resize(m.rows());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) s.rows[i].emplace_back(j, m(i, j));
  return s;
}

LinearOperator::LinearOperator(Matrix dense)
    : dense_(std::move(dense)), sparse_(SparseRows::from_dense(dense_)) {
  if (dense_.rows() != dense_.cols()) throw StateError("linear operator must be square");
}

void LinearOperator::apply(const Matrix& in, Matrix& out, Exec exec) const {
  const Index n = size();
  if (in.rows() != n) {
    throw StateError("operator of size " + std::to_string(n) + " applied to " +
                     std::to_string(in.rows()) + " rows");
  }
  if (&in == &out) throw StateError("operator apply cannot run in place");
  const Index p = in.cols();
  out.resize(n, p);
  if (exec == Exec::serial) {
    for (Index i = 0; i < n; ++i) {
      for (Index c = 0; c < p; ++c) {
        double acc = 0.0;
        for (Index j = 0; j < n; ++j) {
          if (dense_(i, j) != 0.0) acc += dense_(i, j) * in(j, c);
        }
        out(i, c) = acc;
      }
    }
    return;
  }
  kernels::for_each_row(n, Exec::parallel, [&](Index i) {
    for (Index c = 0; c < p; ++c) {
      double acc = 0.0;
      for (const auto& [j, w] : sparse_.rows[i]) acc += w * in(j, c);
      out(i, c) = acc;
    }
  });
}

Matrix LinearOperator::apply(const Matrix& in, Exec exec) const {
  Matrix out;
  apply(in, out, exec);
  return out;
}

namespace kernels {

void prox_rows(const ProxOperator& phi, const Matrix& z, double gamma, Matrix& x, Exec exec) {
  phi.check_gamma(gamma);
  x.resize(z.rows(), z.cols());
  for_each_row(z.rows(), exec, [&](Index i) {
    x.row(i) = phi.prox(z.row(i).transpose(), gamma).transpose();
  });
}

void agent_gradients(const GradientSource& grads, const Matrix& x, std::uint64_t iteration,
                     Matrix& g, Exec exec) {
  if (x.rows() != grads.agents()) throw StateError("iterate rows do not match agent count");
  g.resize(x.rows(), x.cols());
  for_each_row(x.rows(), exec, [&](Index i) {
    g.row(i) = grads(i, x.row(i).transpose(), iteration).transpose();
  });
}

Matrix normal_directions(const Matrix& g, const Matrix& z, const Matrix& x, double gamma) {
  return g + (z - x) / gamma;
}

Vector row_mean(const Matrix& m) {
  Vector acc = Vector::Zero(m.cols());
  for (Index i = 0; i < m.rows(); ++i) acc += m.row(i).transpose();
  return acc / static_cast<double>(m.rows());
}

}  // namespace kernels

}  // namespace proxnet
