#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace mas {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Agent indices are 0-based here; I/O layers shift by one.
struct Edge {
  int tail = 0;  // always the lower index
  int head = 0;
};

class NetworkGraph {
 public:
  // Edges are given 1-based, as read from scenario files.
  static NetworkGraph build(int agent_count, std::span<const std::pair<int, int>> edges,
                            int dimension);

  int agent_count() const noexcept { return agent_count_; }
  int dimension() const noexcept { return dimension_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  // Sorted ascending; this order is N(i) everywhere downstream.
  const std::vector<int>& neighbors(int agent) const { return neighbors_.at(agent); }
  int degree(int agent) const { return static_cast<int>(neighbors_.at(agent).size()); }

  Matrix incidence() const;
  Matrix laplacian() const;

 private:
  NetworkGraph() = default;
  int agent_count_ = 0;
  int dimension_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighbors_;
};

struct SpectralData {
  Matrix laplacian;
  Matrix incidence;
  Vector eigenvalues;  // ascending
  double lambda2 = 0.0;
  double lambda_max = 0.0;
  double incidence_transpose_norm = 0.0;
};

inline constexpr double kConnectivityTolerance = 1e-9;

SpectralData spectral(const NetworkGraph& g);

// Agent-major stack of N positions in R^n.
class StackVector {
 public:
  StackVector(int agents, int dimension);
  StackVector(int agents, int dimension, Vector values);

  int agents() const noexcept { return agents_; }
  int dimension() const noexcept { return dimension_; }
  const Vector& values() const noexcept { return values_; }
  Vector& values() noexcept { return values_; }

  auto agent(int i) { return values_.segment(i * dimension_, dimension_); }
  auto agent(int i) const { return values_.segment(i * dimension_, dimension_); }
  // c(x, k): the k-th coordinate of every agent, k 0-based.
  Vector component(int k) const;
  double norm() const { return values_.norm(); }

 private:
  int agents_;
  int dimension_;
  Vector values_;
};

// x~ = D^T x, one n-block per edge: x_tail - x_head.
Vector relative_state(const NetworkGraph& g, const StackVector& x);

// Projection of x onto the complement of the agreement subspace.
StackVector disagreement(const StackVector& x);

}  // namespace mas
