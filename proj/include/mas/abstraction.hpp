#pragma once

#include "mas/bounds.hpp"
#include "mas/graph.hpp"
#include "mas/partition.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace mas {

// Own cell first, then one cell per neighbor in N(i) order.
using ActionTuple = std::vector<CellIndex>;

struct IndexVectorHash {
  std::size_t operator()(const std::vector<CellIndex>& v) const noexcept {
    std::size_t h = 0xcbf29ce484222325ull;
    for (auto x : v) h = (h ^ (x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2))) * 0x100000001b3ull;
    return h;
  }
};

struct TransitionCertificate {
  int agent = 0;
  CellIndex source = 0;
  CellIndex target = 0;
  std::vector<CellIndex> neighbor_cells;
  Vector nominal_input;  // for a start at the source center
  double remainder_bound = 0.0;
};

// Quantities behind the enabling decision, exposed for diagnostics.
struct TransitionCheck {
  double worst_offset = 0.0;  // max over vertices of |c_t - x0 - dt f_i|
  double reach_radius = 0.0;  // dt * lambda * v_max
  double remainder = 0.0;     // rho(dt)
  double inradius = 0.0;      // of the target cell
  bool reach_ok() const { return worst_offset <= reach_radius * (1.0 + 1e-12); }
  bool remainder_ok() const { return remainder <= inradius; }
  bool enabled() const { return reach_ok() && remainder_ok(); }
};

Vector drift(const NetworkGraph& g, int agent, const Vector& x_i,
             std::span<const Vector> x_neighbors);

TransitionCheck check_transition(const NetworkGraph& g, const CellDecomposition& cells, int agent,
                                 CellIndex source, std::span<const CellIndex> neighbor_cells,
                                 CellIndex target, const BoundsReport& bounds,
                                 const DiscretizationRange& disc);

std::optional<TransitionCertificate> transition_enabled(
    const NetworkGraph& g, const CellDecomposition& cells, int agent, CellIndex source,
    std::span<const CellIndex> neighbor_cells, CellIndex target, const BoundsReport& bounds,
    const DiscretizationRange& disc);

struct AgentTransition {
  ActionTuple action;
  CellIndex target = 0;
  std::optional<TransitionCertificate> certificate;
};

class AgentWTS {
 public:
  AgentWTS(int agent, std::vector<int> neighbors, std::vector<ServiceSet> labels,
           CellIndex initial, double dt);

  void add_transition(CellIndex source, ActionTuple action, CellIndex target,
                      std::optional<TransitionCertificate> certificate = std::nullopt);

  int agent() const noexcept { return agent_; }
  const std::vector<int>& neighbors() const noexcept { return neighbors_; }
  std::size_t state_count() const noexcept { return labels_.size(); }
  CellIndex initial() const noexcept { return initial_; }
  double dt() const noexcept { return dt_; }
  const ServiceSet& label(CellIndex s) const { return labels_.at(s); }
  std::size_t transition_count() const noexcept { return transition_count_; }

  const std::vector<AgentTransition>& outgoing(CellIndex s) const { return out_.at(s); }
  // Post_i(s, action); empty when the action is not enabled.
  std::span<const CellIndex> post(const ActionTuple& action) const;
  // Distinct targets over all actions, ascending.
  const std::vector<CellIndex>& successors(CellIndex s) const { return succ_.at(s); }
  const TransitionCertificate* certificate(const ActionTuple& action, CellIndex target) const;

 private:
  int agent_;
  std::vector<int> neighbors_;
  std::vector<ServiceSet> labels_;
  CellIndex initial_;
  double dt_;
  std::size_t transition_count_ = 0;
  std::vector<std::vector<AgentTransition>> out_;
  std::vector<std::vector<CellIndex>> succ_;
  std::unordered_map<ActionTuple, std::vector<CellIndex>, IndexVectorHash> post_;
};

inline constexpr std::size_t kDefaultActionCap = 10'000'000;

AgentWTS build_agent_wts(int agent, const CellDecomposition& cells,
                         const ServiceLabeling& labeling, const NetworkGraph& g,
                         const BoundsReport& bounds, const DiscretizationRange& disc,
                         CellIndex initial_cell, std::size_t max_actions = kDefaultActionCap);

// Lazy product; the WTS list must outlive it.
class ProductWTS {
 public:
  using State = std::vector<CellIndex>;

  explicit ProductWTS(std::span<const AgentWTS> agents);

  std::size_t agents() const noexcept { return agents_.size(); }
  const AgentWTS& agent(int i) const { return agents_[static_cast<std::size_t>(i)]; }
  double dt() const noexcept { return agents_.front().dt(); }
  State initial() const;
  // pr_i: own cell followed by the neighbors' cells.
  ActionTuple projection(int agent, const State& s) const;
  // Lexicographic order over the per-agent Post sets.
  std::vector<State> successors(const State& s) const;
  bool is_transition(const State& from, const State& to) const;
  ServiceSet label(const State& s) const;

 private:
  std::span<const AgentWTS> agents_;
};

struct FeedbackInput {
  Vector v;
  bool clamped = false;
};

// v = clamp((c_target - x_i - dt f_i(x)) / dt), held constant over the interval.
FeedbackInput feedback_input(const NetworkGraph& g, const CellDecomposition& cells, int agent,
                             const StackVector& x, CellIndex target, double dt, double v_max);

}  // namespace mas
