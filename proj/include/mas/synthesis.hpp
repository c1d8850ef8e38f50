#pragma once

#include "mas/abstraction.hpp"
#include "mas/lasso.hpp"
#include "mas/mitl.hpp"
#include "mas/tba.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace mas {

// Transition-system views consumed by the Buchi product.
class AgentView {
 public:
  using State = CellIndex;
  explicit AgentView(const AgentWTS& wts) : wts_(wts) {}
  std::vector<State> initial() const { return {wts_.initial()}; }
  std::vector<State> successors(State s) const { return wts_.successors(s); }
  const ServiceSet& label(State s) const { return wts_.label(s); }
  double dt() const { return wts_.dt(); }
  static std::vector<CellIndex> cells(State s) { return {s}; }

 private:
  const AgentWTS& wts_;
};

class JointView {
 public:
  using State = ProductWTS::State;
  explicit JointView(const ProductWTS& p) : p_(p) {}
  std::vector<State> initial() const { return {p_.initial()}; }
  std::vector<State> successors(const State& s) const { return p_.successors(s); }
  ServiceSet label(const State& s) const { return p_.label(s); }
  double dt() const { return p_.dt(); }
  static const std::vector<CellIndex>& cells(const State& s) { return s; }

 private:
  const ProductWTS& p_;
};

// Clock readings are integer multiples of dt; -1 marks a saturated clock.
template <class State>
struct BuchiState {
  State state{};
  std::uint32_t location = 0;
  std::vector<std::int32_t> ticks;
  bool operator==(const BuchiState&) const = default;
};

template <class State>
struct BuchiStateHash {
  std::size_t operator()(const BuchiState<State>& n) const noexcept {
    std::size_t h = n.location * 0x9e3779b97f4a7c15ull;
    auto mix = [&h](std::size_t x) { h = (h ^ x) * 0x100000001b3ull; };
    if constexpr (std::is_integral_v<State>) {
      mix(static_cast<std::size_t>(n.state));
    } else {
      for (auto c : n.state) mix(static_cast<std::size_t>(c));
    }
    for (auto t : n.ticks) mix(static_cast<std::size_t>(t) + 7u);
    return h;
  }
};

// Lazy product of a WTS view with a TBA; every transition lasts one dt.
template <class TS>
class BuchiProduct {
 public:
  using Node = BuchiState<typename TS::State>;
  using Hash = BuchiStateHash<typename TS::State>;

  BuchiProduct(TS ts, const TimedAutomaton& a)
      : ts_(std::move(ts)),
        a_(a),
        dt_(ts_.dt()),
        max_ticks_(static_cast<std::int32_t>(std::floor(a.c_max() / ts_.dt() + 1e-9))) {}

  const TS& system() const { return ts_; }
  const TimedAutomaton& automaton() const { return a_; }
  double dt() const { return dt_; }
  std::int32_t max_ticks() const { return max_ticks_; }

  std::vector<Node> initial() const {
    std::vector<Node> out;
    const std::vector<double> zero(a_.clocks().size(), 0.0);
    for (const auto& s : ts_.initial())
      for (std::uint32_t q = 0; q < a_.locations().size(); ++q) {
        const auto& l = a_.locations()[q];
        if (l.initial && letter_holds(l.initial_letter, ts_.label(s)) &&
            satisfied(l.invariant, zero))
          out.push_back({s, q, std::vector<std::int32_t>(zero.size(), 0)});
      }
    return out;
  }

  std::vector<Node> successors(const Node& n) const {
    std::vector<std::int32_t> ticks(n.ticks.size());
    std::vector<double> values(n.ticks.size());
    for (std::size_t c = 0; c < ticks.size(); ++c) {
      ticks[c] = n.ticks[c] < 0 || n.ticks[c] + 1 > max_ticks_ ? -1 : n.ticks[c] + 1;
      values[c] = ticks[c] < 0 ? kInfinity : ticks[c] * dt_;
    }
    std::vector<Node> out;
    for (const auto& s : ts_.successors(n.state)) {
      const auto& letter = ts_.label(s);
      for (auto e : a_.outgoing(n.location)) {
        const auto& edge = a_.edges()[e];
        if (!satisfied(edge.guard, values) || !letter_holds(edge.letter, letter)) continue;
        Node m{s, static_cast<std::uint32_t>(edge.target), ticks};
        std::vector<double> u = values;
        for (auto r : edge.resets) {
          m.ticks[r] = 0;
          u[r] = 0.0;
        }
        if (!satisfied(a_.locations()[edge.target].invariant, u)) continue;
        out.push_back(std::move(m));
      }
    }
    return out;
  }

  bool accepting(const Node& n) const { return a_.locations()[n.location].accepting; }

 private:
  TS ts_;
  const TimedAutomaton& a_;
  double dt_;
  std::int32_t max_ticks_;
};

template <class TS>
std::optional<Lasso<typename BuchiProduct<TS>::Node>> find_accepting_lasso(
    const BuchiProduct<TS>& b, std::size_t max_states, SearchStats* stats = nullptr) {
  return nested_dfs(b, max_states, stats);
}

// A WTS run as a lasso of cells, one per dt step.
struct Run {
  std::vector<CellIndex> prefix;
  std::vector<CellIndex> cycle;
  bool operator==(const Run&) const = default;
  CellIndex at(std::size_t step) const {
    return step < prefix.size() ? prefix[step] : cycle[(step - prefix.size()) % cycle.size()];
  }
};

template <class Node>
Run project(const Lasso<Node>& l) {
  Run r;
  for (const auto& n : l.prefix) r.prefix.push_back(n.state);
  for (const auto& n : l.cycle) r.cycle.push_back(n.state);
  return r;
}

inline constexpr std::size_t kDefaultUnrollCap = 1000;

struct AlignedRuns {
  std::size_t prefix_length = 0;
  std::size_t cycle_length = 0;
  std::vector<Run> runs;  // all with the common lengths
};

// Common prefix max(P_i) and cycle lcm(C_i); LengthMismatch beyond the cap.
AlignedRuns align(std::span<const Run> runs, std::size_t max_unroll = kDefaultUnrollCap);

bool consistent(std::span<const Run> runs, const ProductWTS& p,
                std::size_t max_unroll = kDefaultUnrollCap);

// Timed word of a run under the agent's labels, tau(j) = j dt.
TimedWord run_word(const Run& r, const AgentWTS& wts);

// First instant witnessing the operand of a top-level eventually inside its window.
std::optional<double> satisfaction_time(const Formula& f, const Run& r, const AgentWTS& wts,
                                        std::size_t horizon = kDefaultHorizon);

struct SynthesisOptions {
  std::size_t max_states = 1'000'000;
  std::size_t max_iters = 10'000;
  std::size_t runs_per_agent = 32;
  std::size_t max_unroll = kDefaultUnrollCap;
  bool skip_combination = false;  // go straight to the joint product
};

struct AgentPlan {
  int agent = 0;
  std::string formula;
  Run run;  // aligned to the plan's common lengths
  std::vector<ActionTuple> actions;  // action at step t, t < P + C
  std::vector<std::optional<TransitionCertificate>> certificates;
  std::optional<double> satisfaction_time;
};

struct Plan {
  double dt = 0.0;
  std::size_t prefix_length = 0;
  std::size_t cycle_length = 0;
  std::vector<AgentPlan> agents;
};

struct SynthesisReport {
  int step = 0;  // 3 or 4
  std::vector<std::size_t> agent_product_states;
  std::vector<std::size_t> agent_runs;
  std::size_t combinations_tried = 0;
  std::size_t joint_product_states = 0;
};

struct SynthesisResult {
  Plan plan;
  SynthesisReport report;
};

// Throws Unsatisfiable when the joint search is exhausted without a lasso.
SynthesisResult synthesize(std::span<const AgentWTS> agents, std::span<const FormulaPtr> formulas,
                           const SynthesisOptions& options = {});

}  // namespace mas
