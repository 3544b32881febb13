#pragma once

// Per-agent data-parallel kernels. Every kernel has a serial reference path
// and an OpenMP path; both perform the same floating-point operations in the
// same order per output row, so results are identical bit for bit regardless
// of thread count.

#include <cstdint>
#include <exception>
#include <mutex>
#include <utility>
#include <vector>

#include "proxnet/common.hpp"
#include "proxnet/oracle.hpp"
#include "proxnet/prox.hpp"

namespace proxnet {

enum class Exec { serial, parallel };

namespace kernels {

/// Calls fn(i) for i in [0, n). Exceptions thrown by fn are rethrown on the
/// calling thread (the first one wins).
template <class Fn>
void for_each_row(Index n, Exec exec, Fn&& fn) {
  if (exec == Exec::serial) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex guard;
#pragma omp parallel for schedule(dynamic)
  for (Index i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace kernels

/// Row-sparse copy of a dense matrix (exact zeros dropped).
struct SparseRows {
  std::vector<std::vector<std::pair<Index, double>>> rows;
  Index cols = 0;

  static SparseRows from_dense(const Matrix& m);
};

/// An n x n matrix acting on stacked agent rows.
class LinearOperator {
 public:
  LinearOperator() = default;
  explicit LinearOperator(Matrix dense);

  Index size() const noexcept { return dense_.rows(); }
  const Matrix& dense() const noexcept { return dense_; }
  const SparseRows& sparse() const noexcept { return sparse_; }

  /// out = M * in. Serial path is the dense reference triple loop; the
  /// parallel path walks the sparse rows. Summation is in ascending column
  /// order in both.
  void apply(const Matrix& in, Matrix& out, Exec exec) const;
  Matrix apply(const Matrix& in, Exec exec) const;

 private:
  Matrix dense_;
  SparseRows sparse_;
};

namespace kernels {

/// X.row(i) = prox(Z.row(i), gamma).
void prox_rows(const ProxOperator& phi, const Matrix& z, double gamma, Matrix& x, Exec exec);

/// G.row(i) = stochastic gradient of agent i at X.row(i), stream `iteration`.
void agent_gradients(const GradientSource& grads, const Matrix& x, std::uint64_t iteration,
                     Matrix& g, Exec exec);

/// Row-wise normal-map direction G + (Z - X) / gamma.
Matrix normal_directions(const Matrix& g, const Matrix& z, const Matrix& x, double gamma);

/// Column means accumulated in ascending row order.
Vector row_mean(const Matrix& m);

}  // namespace kernels

}  // namespace proxnet
