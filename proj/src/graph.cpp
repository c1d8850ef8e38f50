#include "mas/graph.hpp"

#include "mas/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <set>
#include <string>

namespace mas {

NetworkGraph NetworkGraph::build(int agent_count, std::span<const std::pair<int, int>> edges,
                                 int dimension) {
  if (agent_count < 1) throw Error(Errc::invalid_argument, "agent_count must be positive");
  if (dimension < 1) throw Error(Errc::invalid_argument, "dimension must be positive");

  NetworkGraph g;
  g.agent_count_ = agent_count;
  g.dimension_ = dimension;
  g.neighbors_.resize(agent_count);

  std::set<std::pair<int, int>> seen;
  for (auto [a, b] : edges) {
    if (a < 1 || b < 1 || a > agent_count || b > agent_count)
      throw Error(Errc::invalid_argument,
                  "edge {" + std::to_string(a) + "," + std::to_string(b) + "} out of range");
    if (a == b) throw Error(Errc::self_loop, "agent " + std::to_string(a));
    const std::pair<int, int> key = std::minmax(a - 1, b - 1);
    if (!seen.insert(key).second)
      throw Error(Errc::duplicate_edge,
                  "{" + std::to_string(a) + "," + std::to_string(b) + "}");
    g.edges_.push_back({key.first, key.second});
    g.neighbors_[key.first].push_back(key.second);
    g.neighbors_[key.second].push_back(key.first);
  }
  for (auto& n : g.neighbors_) std::sort(n.begin(), n.end());

  // A single agent is trivially connected; the synthesis layer uses that case.
  if (agent_count >= 2) {
    auto s = spectral(g);
    if (s.lambda2 <= kConnectivityTolerance)
      throw Error(Errc::disconnected_graph,
                  "algebraic connectivity " + std::to_string(s.lambda2));
  }
  return g;
}

Matrix NetworkGraph::incidence() const {
  Matrix d = Matrix::Zero(agent_count_, static_cast<Eigen::Index>(edges_.size()));
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    d(edges_[e].tail, static_cast<Eigen::Index>(e)) = 1.0;
    d(edges_[e].head, static_cast<Eigen::Index>(e)) = -1.0;
  }
  return d;
}

Matrix NetworkGraph::laplacian() const {
  Matrix d = incidence();
  return d * d.transpose();
}

SpectralData spectral(const NetworkGraph& g) {
  SpectralData s;
  s.incidence = g.incidence();
  s.laplacian = s.incidence * s.incidence.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s.laplacian, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error(Errc::numerical, "Laplacian eigensolve");
  s.eigenvalues = solver.eigenvalues();
  // The smallest eigenvalue is exactly zero; clip rounding noise.
  s.eigenvalues(0) = std::max(0.0, s.eigenvalues(0));
  s.lambda2 = s.eigenvalues.size() > 1 ? s.eigenvalues(1) : 0.0;
  s.lambda_max = s.eigenvalues(s.eigenvalues.size() - 1);
  s.incidence_transpose_norm = std::sqrt(std::max(0.0, s.lambda_max));
  return s;
}

StackVector::StackVector(int agents, int dimension)
    : agents_(agents), dimension_(dimension), values_(Vector::Zero(agents * dimension)) {}

StackVector::StackVector(int agents, int dimension, Vector values)
    : agents_(agents), dimension_(dimension), values_(std::move(values)) {
  if (values_.size() != agents * dimension)
    throw Error(Errc::dimension_mismatch, "stack vector length " +
                                              std::to_string(values_.size()) + " != " +
                                              std::to_string(agents * dimension));
}

Vector StackVector::component(int k) const {
  Vector c(agents_);
  for (int i = 0; i < agents_; ++i) c(i) = values_(i * dimension_ + k);
  return c;
}

Vector relative_state(const NetworkGraph& g, const StackVector& x) {
  if (x.agents() != g.agent_count() || x.dimension() != g.dimension())
    throw Error(Errc::dimension_mismatch, "stack vector does not match graph");
  const int n = g.dimension();
  Vector out(static_cast<Eigen::Index>(g.edges().size()) * n);
  for (std::size_t e = 0; e < g.edges().size(); ++e) {
    const auto& edge = g.edges()[e];
    out.segment(static_cast<Eigen::Index>(e) * n, n) = x.agent(edge.tail) - x.agent(edge.head);
  }
  return out;
}

StackVector disagreement(const StackVector& x) {
  Vector mean = Vector::Zero(x.dimension());
  for (int i = 0; i < x.agents(); ++i) mean += x.agent(i);
  mean /= x.agents();
  StackVector out = x;
  for (int i = 0; i < x.agents(); ++i) out.agent(i) -= mean;
  return out;
}

}  // namespace mas
