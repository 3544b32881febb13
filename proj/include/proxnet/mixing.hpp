#pragma once

#include <string>
#include <utility>
#include <vector>

#include "proxnet/common.hpp"
#include "proxnet/kernels.hpp"

namespace proxnet {

/// Undirected communication graph. Every node carries a self-loop and the
/// graph is connected; both are enforced at construction.
class Topology {
 public:
  using Edge = std::pair<Index, Index>;

  /// Builds from an undirected edge list (self-loops are implied).
  static Topology from_edges(Index n, const std::vector<Edge>& edges);

  static Topology complete(Index n);
  /// Hub is node 0.
  static Topology star(Index leaves);
  static Topology path(Index n);

  Index size() const noexcept { return n_; }
  bool adjacent(Index i, Index j) const { return adj_[i * n_ + j]; }
  /// Neighbors of i, including i itself, in ascending order.
  const std::vector<Index>& neighbors(Index i) const { return nbrs_[i]; }
  /// Number of neighbors excluding the self-loop.
  Index degree(Index i) const { return static_cast<Index>(nbrs_[i].size()) - 1; }
  bool is_regular() const;

 private:
  Topology(Index n, std::vector<char> adj);

  Index n_ = 0;
  std::vector<char> adj_;
  std::vector<std::vector<Index>> nbrs_;
};

/// Each agent adjacent to itself and its two cyclic neighbors. Requires n >= 3.
Topology build_ring(Index n);

/// Reads "i j" pairs (0-indexed, one per line, '#' comments) from a file.
/// The agent count is the largest index + 1 unless `n` is given.
Topology load_edge_list(const std::string& path, Index n = 0);

struct EigenDecomposition {
  Vector values;   // descending
  Matrix vectors;  // column k pairs with values[k]
};

/// Dense symmetric eigensolver; eigenvalues sorted in descending order.
EigenDecomposition eig(const Matrix& w);

/// Symmetric doubly stochastic mixing matrix with its spectral data cached.
class MixingMatrix {
 public:
  /// Validates symmetry, nonnegativity and double stochasticity (1e-12).
  /// The support of `w` defines the topology, which must be connected.
  static MixingMatrix from_dense(Matrix w);

  Index size() const noexcept { return op_.size(); }
  const Matrix& dense() const noexcept { return op_.dense(); }
  const LinearOperator& op() const noexcept { return op_; }
  const Topology& topology() const noexcept { return topo_; }
  const EigenDecomposition& spectrum() const noexcept { return spec_; }

  /// max(|lambda_2|, |lambda_n|), the spectral norm of W - 11^T/n.
  double lambda() const noexcept { return lambda_; }
  double spectral_gap() const noexcept { return 1.0 - lambda_; }
  bool is_psd(double tol = 1e-10) const { return spec_.values.minCoeff() >= -tol; }

 private:
  MixingMatrix(Matrix w, Topology topo, EigenDecomposition spec, double lambda);

  LinearOperator op_;
  Topology topo_;
  EigenDecomposition spec_;
  double lambda_;
};

/// w_ij = 1/|N_i| (self included). Rejects irregular graphs.
MixingMatrix uniform_weights(const Topology& t);

/// Metropolis-Hastings: w_ij = 1/(1 + max(deg_i, deg_j)) off the diagonal.
MixingMatrix metropolis_weights(const Topology& t);

/// (I + W) / 2; positive semidefinite for any valid W.
MixingMatrix lazy(const MixingMatrix& w);

/// Symmetric PSD square root of I - W. Eigenvalues of W in [-1e-10, 0) are
/// clamped; anything more negative is rejected.
Matrix sqrt_I_minus_W(const MixingMatrix& w);

/// Builds a topology by name: "ring", "complete", "star" (n-1 leaves), "path".
Topology named_topology(const std::string& name, Index n);

/// Builds weights by rule name: "uniform", "metropolis", "lazy-uniform",
/// "lazy-metropolis".
MixingMatrix named_weights(const std::string& rule, const Topology& t);

}  // namespace proxnet
