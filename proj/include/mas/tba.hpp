#pragma once

#include "mas/mitl.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mas {

enum class Cmp { lt, le, ge, gt };

struct ClockBound {
  std::size_t clock = 0;
  Cmp cmp = Cmp::le;
  double constant = 0.0;
};

// Conjunction of atomic bounds; empty means true.
using ClockConstraint = std::vector<ClockBound>;

// Values are clock readings in time units; +inf stands for a saturated clock.
bool satisfied(const ClockConstraint& g, std::span<const double> values);
std::string describe(const ClockConstraint& g, std::span<const std::string> clocks);

// Letter predicates are propositional formulas over the letter read on entering
// the target; nullptr means true.
struct TbaEdge {
  std::size_t source = 0;
  std::size_t target = 0;
  FormulaPtr letter;
  ClockConstraint guard;
  std::vector<std::size_t> resets;
};

struct TbaLocation {
  std::string name;
  bool initial = false;
  FormulaPtr initial_letter;  // checked against the first letter
  bool accepting = false;
  ClockConstraint invariant;
};

class TimedAutomaton {
 public:
  TimedAutomaton(std::vector<std::string> clocks, std::vector<TbaLocation> locations,
                 std::vector<TbaEdge> edges);

  const std::vector<std::string>& clocks() const noexcept { return clocks_; }
  const std::vector<TbaLocation>& locations() const noexcept { return locations_; }
  const std::vector<TbaEdge>& edges() const noexcept { return edges_; }
  const std::vector<std::size_t>& outgoing(std::size_t loc) const { return outgoing_.at(loc); }
  // Largest constant in any guard or invariant.
  double c_max() const noexcept { return c_max_; }

 private:
  std::vector<std::string> clocks_;
  std::vector<TbaLocation> locations_;
  std::vector<TbaEdge> edges_;
  std::vector<std::vector<std::size_t>> outgoing_;
  double c_max_ = 0.0;
};

bool letter_holds(const FormulaPtr& predicate, const ServiceSet& letter);

// Flat MITL only; boolean structure above the temporal operators becomes
// products and unions of template automata.
TimedAutomaton from_flat_mitl(const FormulaPtr& f);

TimedAutomaton intersect(const TimedAutomaton& a, const TimedAutomaton& b);
TimedAutomaton unite(const TimedAutomaton& a, const TimedAutomaton& b);
TimedAutomaton universal_acceptor();

inline constexpr std::size_t kDefaultNodeCap = 1'000'000;

bool accepts_lasso(const TimedAutomaton& a, const TimedWord& w,
                   std::size_t max_nodes = kDefaultNodeCap);

// Value after a delay, collapsed to +inf beyond c_max.
double saturate(double value, double c_max);

}  // namespace mas
