#include "proxnet/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace proxnet {

namespace {

bool connected(Index n, const std::vector<std::vector<Index>>& nbrs) {
  std::vector<char> seen(n, 0);
  std::vector<Index> stack{0};
  seen[0] = 1;
  Index count = 1;
  while (!stack.empty()) {
    const Index u = stack.back();
    stack.pop_back();
    for (Index v : nbrs[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n;
}

}  // namespace

Topology::Topology(Index n, std::vector<char> adj) : n_(n), adj_(std::move(adj)), nbrs_(n) {
  for (Index i = 0; i < n_; ++i) {
    for (Index j = 0; j < n_; ++j) {
      if (adj_[i * n_ + j]) nbrs_[i].push_back(j);
    }
  }
  if (!connected(n_, nbrs_)) throw TopologyError("topology is not connected");
}

Topology Topology::from_edges(Index n, const std::vector<Edge>& edges) {
  if (n < 1) throw TopologyError("topology needs at least one agent");
  std::vector<char> adj(n * n, 0);
  for (Index i = 0; i < n; ++i) adj[i * n + i] = 1;
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw TopologyError("edge (" + std::to_string(i) + "," + std::to_string(j) +
                          ") out of range for n=" + std::to_string(n));
    }
    adj[i * n + j] = 1;
    adj[j * n + i] = 1;
  }
  return Topology(n, std::move(adj));
}

Topology Topology::complete(Index n) {
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return from_edges(n, edges);
}

Topology Topology::star(Index leaves) {
  if (leaves < 1) throw TopologyError("star needs at least one leaf");
  std::vector<Edge> edges;
  for (Index j = 1; j <= leaves; ++j) edges.emplace_back(0, j);
  return from_edges(leaves + 1, edges);
}

Topology Topology::path(Index n) {
  std::vector<Edge> edges;
  for (Index i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return from_edges(n, edges);
}

bool Topology::is_regular() const {
  for (Index i = 1; i < n_; ++i)
    if (degree(i) != degree(0)) return false;
  return true;
}

Topology build_ring(Index n) {
  if (n < 3) throw TopologyError("ring needs n >= 3, got " + std::to_string(n));
  std::vector<Topology::Edge> edges;
  for (Index i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  return Topology::from_edges(n, edges);
}

Topology load_edge_list(const std::string& path, Index n) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list '" + path + "'");
  std::vector<Topology::Edge> edges;
  Index max_index = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    long long i = 0, j = 0;
    if (!(ss >> i)) continue;
    if (!(ss >> j)) {
      throw TopologyError(path + ":" + std::to_string(lineno) + ": expected 'i j'");
    }
    edges.emplace_back(i, j);
    max_index = std::max<Index>(max_index, std::max<Index>(i, j));
  }
  return Topology::from_edges(n > 0 ? n : max_index + 1, edges);
}

EigenDecomposition eig(const Matrix& w) {
  if (w.rows() != w.cols()) throw NumericError("eig: matrix is not square");
  if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw NumericError("eig: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(w);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "eig: symmetric eigensolver failed (n=" << w.rows()
        << ", max|w|=" << w.cwiseAbs().maxCoeff() << ", finite=" << w.allFinite() << ")";
    throw NumericError(msg.str());
  }
  // Eigen returns ascending order.
  EigenDecomposition out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

MixingMatrix::MixingMatrix(Matrix w, Topology topo, EigenDecomposition spec, double lambda)
    : op_(std::move(w)),
      topo_(std::move(topo)),
      spec_(std::move(spec)),
      lambda_(lambda) {}

MixingMatrix MixingMatrix::from_dense(Matrix w) {
  const Index n = w.rows();
  if (n < 1 || w.cols() != n) throw TopologyError("mixing matrix must be square and non-empty");
  if (!w.allFinite()) throw NumericError("mixing matrix has non-finite entries");
  if (w.minCoeff() < 0.0) throw TopologyError("mixing matrix has negative entries");
  if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw TopologyError("mixing matrix is not symmetric");
  }
  const double row_err = (w.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double col_err = (w.colwise().sum().array() - 1.0).abs().maxCoeff();
  if (row_err > 1e-12 || col_err > 1e-12) {
    throw TopologyError("mixing matrix is not doubly stochastic (row err " +
                        std::to_string(row_err) + ", col err " + std::to_string(col_err) + ")");
  }
  std::vector<Topology::Edge> edges;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (w(i, j) > 0.0) edges.emplace_back(i, j);
  Topology topo = Topology::from_edges(n, edges);

  EigenDecomposition spec = eig(w);
  double lambda = 0.0;
  if (n > 1) lambda = std::max(std::abs(spec.values[1]), std::abs(spec.values[n - 1]));
  if (std::abs(spec.values[0] - 1.0) > 1e-10) {
    throw NumericError("leading eigenvalue of mixing matrix is " + std::to_string(spec.values[0]));
  }
  return MixingMatrix(std::move(w), std::move(topo), std::move(spec), lambda);
}

MixingMatrix uniform_weights(const Topology& t) {
  if (!t.is_regular()) {
    throw TopologyError(
        "uniform weights on an irregular graph are not symmetric; use metropolis_weights");
  }
  const Index n = t.size();
  Matrix w = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const double share = 1.0 / static_cast<double>(t.neighbors(i).size());
    for (Index j : t.neighbors(i)) w(i, j) = share;
  }
  return MixingMatrix::from_dense(std::move(w));
}

MixingMatrix metropolis_weights(const Topology& t) {
  const Index n = t.size();
  Matrix w = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    double off = 0.0;
    for (Index j : t.neighbors(i)) {
      if (j == i) continue;
      w(i, j) = 1.0 / (1.0 + static_cast<double>(std::max(t.degree(i), t.degree(j))));
      off += w(i, j);
    }
    w(i, i) = 1.0 - off;
  }
  return MixingMatrix::from_dense(std::move(w));
}

MixingMatrix lazy(const MixingMatrix& w) {
  const Index n = w.size();
  Matrix out = 0.5 * (Matrix::Identity(n, n) + w.dense());
  return MixingMatrix::from_dense(std::move(out));
}

Matrix sqrt_I_minus_W(const MixingMatrix& w) {
  const auto& spec = w.spectrum();
  const double min_eig = spec.values.minCoeff();
  if (min_eig < -1e-10) {
    throw NumericError("W is not positive semidefinite (min eigenvalue " +
                       std::to_string(min_eig) + "); apply lazy() first");
  }
  // I - W has eigenvalues 1 - lambda_i in [0, 1]. The consensus eigenvalue is
  // exactly zero; rounding would otherwise leave a 1e-8 root behind.
  Vector gaps = (1.0 - spec.values.array()).max(0.0);
  for (Index i = 0; i < gaps.size(); ++i)
    if (gaps[i] < 1e-12) gaps[i] = 0.0;
  Vector roots = gaps.array().sqrt();
  Matrix s = spec.vectors * roots.asDiagonal() * spec.vectors.transpose();
  return 0.5 * (s + s.transpose());
}

Topology named_topology(const std::string& name, Index n) {
  if (name == "ring") return build_ring(n);
  if (name == "complete") return Topology::complete(n);
  if (name == "star") return Topology::star(n - 1);
  if (name == "path") return Topology::path(n);
  throw TopologyError("unknown topology '" + name + "' (valid: ring, complete, star, path)");
}

MixingMatrix named_weights(const std::string& rule, const Topology& t) {
  if (rule == "uniform") return uniform_weights(t);
  if (rule == "metropolis") return metropolis_weights(t);
  if (rule == "lazy-uniform") return lazy(uniform_weights(t));
  if (rule == "lazy-metropolis") return lazy(metropolis_weights(t));
  throw TopologyError("unknown weight rule '" + rule +
                      "' (valid: uniform, metropolis, lazy-uniform, lazy-metropolis)");
}

}  // namespace proxnet
