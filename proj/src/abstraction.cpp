#include "mas/abstraction.hpp"

#include "mas/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mas {

Vector drift(const NetworkGraph& g, int agent, const Vector& x_i,
             std::span<const Vector> x_neighbors) {
  if (static_cast<int>(x_neighbors.size()) != g.degree(agent))
    throw Error(Errc::arity_mismatch, "agent " + std::to_string(agent + 1) + " has " +
                                          std::to_string(g.degree(agent)) + " neighbors, got " +
                                          std::to_string(x_neighbors.size()));
  Vector f = Vector::Zero(x_i.size());
  for (const auto& xj : x_neighbors) f -= x_i - xj;
  return f;
}

TransitionCheck check_transition(const NetworkGraph& g, const CellDecomposition& cells, int agent,
                                 CellIndex source, std::span<const CellIndex> neighbor_cells,
                                 CellIndex target, const BoundsReport& bounds,
                                 const DiscretizationRange& disc) {
  if (static_cast<int>(neighbor_cells.size()) != g.degree(agent))
    throw Error(Errc::arity_mismatch, "neighbor cell tuple");
  const double dt = disc.chosen_dt;
  const double self = 1.0 - dt * g.degree(agent);
  const Box& src = cells.cell(source);
  const Box& dst = cells.cell(target);

  // c_t - x0 - dt f is affine in the vertices, so its range over the product of
  // boxes is a box: center value plus per-axis half-widths.
  Vector center = dst.center() - self * src.center();
  Vector half = std::abs(self) * src.sides() / 2.0;
  for (CellIndex c : neighbor_cells) {
    center -= dt * cells.cell(c).center();
    half += dt * cells.cell(c).sides() / 2.0;
  }
  TransitionCheck out;
  out.worst_offset = (center.cwiseAbs() + half).norm();
  out.reach_radius = dt * bounds.lambda_reach * bounds.v_max;
  out.remainder = remainder_bound(bounds, dt);
  out.inradius = dst.inradius();
  return out;
}

namespace {

TransitionCertificate make_certificate(const NetworkGraph& g, const CellDecomposition& cells,
                                       int agent, CellIndex source,
                                       std::span<const CellIndex> neighbor_cells,
                                       CellIndex target, double dt, double remainder) {
  std::vector<Vector> xn;
  for (CellIndex c : neighbor_cells) xn.push_back(cells.cell(c).center());
  const Vector x0 = cells.cell(source).center();
  TransitionCertificate cert;
  cert.agent = agent;
  cert.source = source;
  cert.target = target;
  cert.neighbor_cells.assign(neighbor_cells.begin(), neighbor_cells.end());
  cert.nominal_input = (cells.cell(target).center() - x0 - dt * drift(g, agent, x0, xn)) / dt;
  cert.remainder_bound = remainder;
  return cert;
}

}  // namespace

std::optional<TransitionCertificate> transition_enabled(
    const NetworkGraph& g, const CellDecomposition& cells, int agent, CellIndex source,
    std::span<const CellIndex> neighbor_cells, CellIndex target, const BoundsReport& bounds,
    const DiscretizationRange& disc) {
  auto check = check_transition(g, cells, agent, source, neighbor_cells, target, bounds, disc);
  if (!check.enabled()) return std::nullopt;
  return make_certificate(g, cells, agent, source, neighbor_cells, target, disc.chosen_dt,
                          check.remainder);
}

AgentWTS::AgentWTS(int agent, std::vector<int> neighbors, std::vector<ServiceSet> labels,
                   CellIndex initial, double dt)
    : agent_(agent),
      neighbors_(std::move(neighbors)),
      labels_(std::move(labels)),
      initial_(initial),
      dt_(dt),
      out_(labels_.size()),
      succ_(labels_.size()) {
  if (initial_ >= labels_.size()) throw Error(Errc::invalid_argument, "initial state out of range");
  if (!(dt_ > 0.0)) throw Error(Errc::invalid_argument, "transition weight must be positive");
}

void AgentWTS::add_transition(CellIndex source, ActionTuple action, CellIndex target,
                              std::optional<TransitionCertificate> certificate) {
  if (source >= labels_.size() || target >= labels_.size())
    throw Error(Errc::invalid_argument, "transition state out of range");
  if (action.size() != neighbors_.size() + 1 || action.front() != source)
    throw Error(Errc::arity_mismatch, "action tuple must start with the source cell");
  auto& targets = post_[action];
  if (std::find(targets.begin(), targets.end(), target) != targets.end()) return;
  targets.push_back(target);
  auto& succ = succ_[source];
  auto pos = std::lower_bound(succ.begin(), succ.end(), target);
  if (pos == succ.end() || *pos != target) succ.insert(pos, target);
  out_[source].push_back({std::move(action), target, std::move(certificate)});
  ++transition_count_;
}

std::span<const CellIndex> AgentWTS::post(const ActionTuple& action) const {
  auto it = post_.find(action);
  if (it == post_.end()) return {};
  return it->second;
}

const TransitionCertificate* AgentWTS::certificate(const ActionTuple& action,
                                                   CellIndex target) const {
  if (action.empty() || action.front() >= out_.size()) return nullptr;
  for (const auto& t : out_[action.front()])
    if (t.target == target && t.action == action && t.certificate) return &*t.certificate;
  return nullptr;
}

AgentWTS build_agent_wts(int agent, const CellDecomposition& cells,
                         const ServiceLabeling& labeling, const NetworkGraph& g,
                         const BoundsReport& bounds, const DiscretizationRange& disc,
                         CellIndex initial_cell, std::size_t max_actions) {
  const std::size_t m = cells.size();
  const int degree = g.degree(agent);
  double actions = 1.0;
  for (int k = 0; k <= degree; ++k) actions *= static_cast<double>(m);
  if (actions > static_cast<double>(max_actions))
    throw Error(Errc::budget_exceeded, "agent " + std::to_string(agent + 1) + " has " +
                                           std::to_string(static_cast<long long>(actions)) +
                                           " action tuples");

  std::vector<ServiceSet> labels(m);
  for (CellIndex c = 0; c < m; ++c) labels[c] = labeling.labels(agent, c);
  AgentWTS wts(agent, g.neighbors(agent), std::move(labels), initial_cell, disc.chosen_dt);

  const double dt = disc.chosen_dt;
  const double self = 1.0 - dt * degree;
  const double radius = dt * bounds.lambda_reach * bounds.v_max;
  const double rho = remainder_bound(bounds, dt);
  const int n = g.dimension();

  std::vector<CellIndex> nbr(degree, 0);
  for (CellIndex s = 0; s < m; ++s) {
    std::fill(nbr.begin(), nbr.end(), 0);
    while (true) {
      // Nominal image of the centers; any enabled target center lies within
      // radius - half-width of it per axis.
      Vector p = self * cells.cell(s).center();
      Vector half = std::abs(self) * cells.cell(s).sides() / 2.0;
      for (CellIndex c : nbr) {
        p += dt * cells.cell(c).center();
        half += dt * cells.cell(c).sides() / 2.0;
      }
      Vector reach = (Vector::Constant(n, radius) - half);
      if (reach.minCoeff() >= 0.0) {
        Box query{p - reach, p + reach};
        for (CellIndex t : cells.cells_intersecting(query)) {
          auto check = check_transition(g, cells, agent, s, nbr, t, bounds, disc);
          if (!check.enabled()) continue;
          ActionTuple action{s};
          action.insert(action.end(), nbr.begin(), nbr.end());
          wts.add_transition(s, std::move(action), t,
                             make_certificate(g, cells, agent, s, nbr, t, dt, rho));
        }
      }
      int k = 0;
      for (; k < degree; ++k) {
        if (++nbr[k] < m) break;
        nbr[k] = 0;
      }
      if (k == degree) break;
    }
  }
  return wts;
}

ProductWTS::ProductWTS(std::span<const AgentWTS> agents) : agents_(agents) {
  if (agents_.empty()) throw Error(Errc::invalid_argument, "empty product");
  for (const auto& a : agents_)
    if (std::abs(a.dt() - agents_.front().dt()) > 1e-12 * agents_.front().dt())
      throw Error(Errc::invalid_argument, "agent WTS disagree on dt");
}

ProductWTS::State ProductWTS::initial() const {
  State s;
  for (const auto& a : agents_) s.push_back(a.initial());
  return s;
}

ActionTuple ProductWTS::projection(int agent, const State& s) const {
  ActionTuple a{s.at(static_cast<std::size_t>(agent))};
  for (int j : agents_[static_cast<std::size_t>(agent)].neighbors())
    a.push_back(s.at(static_cast<std::size_t>(j)));
  return a;
}

std::vector<ProductWTS::State> ProductWTS::successors(const State& s) const {
  const std::size_t n = agents_.size();
  std::vector<std::span<const CellIndex>> posts(n);
  for (std::size_t i = 0; i < n; ++i) {
    posts[i] = agents_[i].post(projection(static_cast<int>(i), s));
    if (posts[i].empty()) return {};
  }
  // Post sets are small; sort copies so the product is lexicographic.
  std::vector<std::vector<CellIndex>> sorted(n);
  for (std::size_t i = 0; i < n; ++i) {
    sorted[i].assign(posts[i].begin(), posts[i].end());
    std::sort(sorted[i].begin(), sorted[i].end());
  }
  std::vector<State> out;
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    State t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = sorted[i][idx[i]];
    out.push_back(std::move(t));
    std::size_t k = n;
    while (k-- > 0) {
      if (++idx[k] < sorted[k].size()) break;
      idx[k] = 0;
    }
    if (k == static_cast<std::size_t>(-1)) break;
  }
  return out;
}

bool ProductWTS::is_transition(const State& from, const State& to) const {
  if (from.size() != agents_.size() || to.size() != agents_.size()) return false;
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    auto post = agents_[i].post(projection(static_cast<int>(i), from));
    if (std::find(post.begin(), post.end(), to[i]) == post.end()) return false;
  }
  return true;
}

ServiceSet ProductWTS::label(const State& s) const {
  ServiceSet out;
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const auto& l = agents_[i].label(s[i]);
    out.insert(l.begin(), l.end());
  }
  return out;
}

FeedbackInput feedback_input(const NetworkGraph& g, const CellDecomposition& cells, int agent,
                             const StackVector& x, CellIndex target, double dt, double v_max) {
  std::vector<Vector> xn;
  for (int j : g.neighbors(agent)) xn.push_back(x.agent(j));
  const Vector xi = x.agent(agent);
  FeedbackInput out;
  out.v = (cells.cell(target).center() - xi - dt * drift(g, agent, xi, xn)) / dt;
  const double norm = out.v.norm();
  if (norm > v_max) {
    out.v *= v_max / norm;
    out.clamped = true;
  }
  return out;
}

}  // namespace mas
