#include "mas/tba.hpp"

#include "mas/error.hpp"
#include "mas/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

namespace mas {

bool satisfied(const ClockConstraint& g, std::span<const double> values) {
  for (const auto& b : g) {
    const double v = values[b.clock];
    bool ok = false;
    switch (b.cmp) {
      case Cmp::lt: ok = v < b.constant - kTimeTolerance; break;
      case Cmp::le: ok = v <= b.constant + kTimeTolerance; break;
      case Cmp::ge: ok = v >= b.constant - kTimeTolerance; break;
      case Cmp::gt: ok = v > b.constant + kTimeTolerance; break;
    }
    if (!ok) return false;
  }
  return true;
}

std::string describe(const ClockConstraint& g, std::span<const std::string> clocks) {
  if (g.empty()) return "true";
  std::ostringstream os;
  for (std::size_t i = 0; i < g.size(); ++i) {
    static constexpr const char* ops[] = {"<", "<=", ">=", ">"};
    if (i) os << " && ";
    os << clocks[g[i].clock] << ' ' << ops[static_cast<int>(g[i].cmp)] << ' ' << g[i].constant;
  }
  return os.str();
}

double saturate(double value, double c_max) {
  return value > c_max + kTimeTolerance ? kInfinity : value;
}

bool letter_holds(const FormulaPtr& predicate, const ServiceSet& letter) {
  return !predicate || holds(*predicate, letter);
}

TimedAutomaton::TimedAutomaton(std::vector<std::string> clocks, std::vector<TbaLocation> locations,
                               std::vector<TbaEdge> edges)
    : clocks_(std::move(clocks)),
      locations_(std::move(locations)),
      edges_(std::move(edges)),
      outgoing_(locations_.size()) {
  auto scan = [&](const ClockConstraint& g) {
    for (const auto& b : g) {
      if (b.clock >= clocks_.size()) throw Error(Errc::invalid_argument, "unknown clock");
      c_max_ = std::max(c_max_, b.constant);
    }
  };
  for (const auto& l : locations_) scan(l.invariant);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto& edge = edges_[e];
    if (edge.source >= locations_.size() || edge.target >= locations_.size())
      throw Error(Errc::invalid_argument, "edge endpoint out of range");
    for (auto r : edge.resets)
      if (r >= clocks_.size()) throw Error(Errc::invalid_argument, "unknown reset clock");
    scan(edge.guard);
    outgoing_[edge.source].push_back(e);
  }
}

namespace {

FormulaPtr both(const FormulaPtr& a, const FormulaPtr& b) {
  if (!a) return b;
  if (!b) return a;
  return conjunction(a, b);
}

FormulaPtr negated(const FormulaPtr& f) { return negation(f); }

// Clock-0 constraints for the position of d = tau(j) - tau(0) relative to I.
ClockConstraint in_interval(const TimeInterval& I) {
  ClockConstraint g{{0, I.lower_closed ? Cmp::ge : Cmp::gt, I.lower}};
  if (I.bounded()) g.push_back({0, I.upper_closed ? Cmp::le : Cmp::lt, I.upper});
  return g;
}
ClockConstraint below_interval(const TimeInterval& I) {
  return {{0, I.lower_closed ? Cmp::lt : Cmp::le, I.lower}};
}
ClockConstraint beyond_interval(const TimeInterval& I) {
  return {{0, I.upper_closed ? Cmp::gt : Cmp::ge, I.upper}};
}
ClockConstraint not_beyond(const TimeInterval& I) {
  if (!I.bounded()) return {};
  return {{0, I.upper_closed ? Cmp::le : Cmp::lt, I.upper}};
}

struct Builder {
  std::vector<TbaLocation> locs;
  std::vector<TbaEdge> edges;

  std::size_t loc(std::string name, bool accepting) {
    locs.push_back({std::move(name), false, nullptr, accepting, {}});
    return locs.size() - 1;
  }
  void start(std::size_t q, FormulaPtr letter) {
    locs[q].initial = true;
    locs[q].initial_letter = std::move(letter);
  }
  void edge(std::size_t from, std::size_t to, FormulaPtr letter, ClockConstraint guard,
            bool reset = false) {
    edges.push_back({from, to, std::move(letter), std::move(guard),
                     reset ? std::vector<std::size_t>{0} : std::vector<std::size_t>{}});
  }
  TimedAutomaton done(bool clock = true) {
    return TimedAutomaton(clock ? std::vector<std::string>{"c"} : std::vector<std::string>{},
                          std::move(locs), std::move(edges));
  }
};

TimedAutomaton eventually_template(const TimeInterval& I, const FormulaPtr& psi) {
  Builder b;
  auto q0 = b.loc("q0", false), q1 = b.loc("q1", true), q2 = b.loc("q2", false);
  b.start(q0, nullptr);
  if (I.contains(0.0)) b.start(q1, psi);
  b.edge(q0, q0, nullptr, not_beyond(I));
  b.edge(q0, q1, psi, in_interval(I), true);
  b.edge(q0, q2, nullptr, below_interval(I), true);
  if (I.bounded()) b.edge(q0, q2, nullptr, beyond_interval(I), true);
  b.edge(q1, q1, nullptr, {}, true);
  b.edge(q2, q2, nullptr, {}, true);
  return b.done();
}

TimedAutomaton always_template(const TimeInterval& I, const FormulaPtr& psi) {
  Builder b;
  auto q0 = b.loc("q0", true), q1 = b.loc("q1", true);
  b.start(q0, I.contains(0.0) ? psi : nullptr);
  b.edge(q0, q0, nullptr, below_interval(I));
  b.edge(q0, q0, psi, in_interval(I));
  if (I.bounded()) b.edge(q0, q1, nullptr, beyond_interval(I), true);
  b.edge(q1, q1, nullptr, {}, true);
  return b.done();
}

TimedAutomaton until_template(const TimeInterval& I, const FormulaPtr& lhs, const FormulaPtr& rhs) {
  Builder b;
  auto q0 = b.loc("q0", false), q1 = b.loc("q1", true);
  b.start(q0, lhs);
  if (I.contains(0.0)) b.start(q1, rhs);
  b.edge(q0, q0, lhs, not_beyond(I));
  b.edge(q0, q1, rhs, in_interval(I), true);
  b.edge(q1, q1, nullptr, {}, true);
  return b.done();
}

TimedAutomaton not_until_template(const TimeInterval& I, const FormulaPtr& lhs,
                                  const FormulaPtr& rhs) {
  // q0: lhs held at every position so far and no witness yet; q1: safe.
  Builder b;
  auto q0 = b.loc("q0", true), q1 = b.loc("q1", true);
  const bool zero = I.contains(0.0);
  b.start(q0, zero ? both(lhs, negated(rhs)) : lhs);
  b.start(q1, zero ? both(negated(lhs), negated(rhs)) : negated(lhs));
  b.edge(q0, q0, lhs, below_interval(I));
  b.edge(q0, q0, both(lhs, negated(rhs)), in_interval(I));
  b.edge(q0, q1, negated(lhs), below_interval(I), true);
  b.edge(q0, q1, both(negated(lhs), negated(rhs)), in_interval(I), true);
  if (I.bounded()) b.edge(q0, q1, nullptr, beyond_interval(I), true);
  b.edge(q1, q1, nullptr, {}, true);
  return b.done();
}

TimedAutomaton next_template(const TimeInterval& I, const FormulaPtr& psi) {
  Builder b;
  auto q0 = b.loc("q0", false), q1 = b.loc("q1", true);
  b.start(q0, nullptr);
  b.edge(q0, q1, psi, in_interval(I), true);
  b.edge(q1, q1, nullptr, {}, true);
  return b.done();
}

TimedAutomaton not_next_template(const TimeInterval& I, const FormulaPtr& psi) {
  Builder b;
  auto q0 = b.loc("q0", false), q1 = b.loc("q1", true);
  b.start(q0, nullptr);
  b.edge(q0, q1, negated(psi), {}, true);
  b.edge(q0, q1, nullptr, below_interval(I), true);
  if (I.bounded()) b.edge(q0, q1, nullptr, beyond_interval(I), true);
  b.edge(q1, q1, nullptr, {}, true);
  return b.done();
}

TimedAutomaton propositional_template(const FormulaPtr& psi) {
  Builder b;
  auto q0 = b.loc("q0", true);
  b.start(q0, psi);
  b.edge(q0, q0, nullptr, {});
  return b.done(false);
}

TimedAutomaton literal(const FormulaPtr& f, bool neg) {
  if (is_propositional(*f)) return propositional_template(neg ? negation(f) : f);
  const auto& I = f->interval;
  switch (f->op) {
    case Op::eventually:
      return neg ? always_template(I, negation(f->left)) : eventually_template(I, f->left);
    case Op::always:
      return neg ? eventually_template(I, negation(f->left)) : always_template(I, f->left);
    case Op::until:
      return neg ? not_until_template(I, f->left, f->right) : until_template(I, f->left, f->right);
    case Op::next: return neg ? not_next_template(I, f->left) : next_template(I, f->left);
    default: break;
  }
  throw Error(Errc::invalid_argument, "not a temporal literal");
}

TimedAutomaton translate(const FormulaPtr& f, bool neg) {
  if (is_propositional(*f) || is_temporal(f->op)) return literal(f, neg);
  if (f->op == Op::negation) return translate(f->left, !neg);
  // Conjunction; under negation it becomes a disjunction.
  auto a = translate(f->left, neg), b = translate(f->right, neg);
  return neg ? unite(a, b) : intersect(a, b);
}

ClockConstraint shifted(const ClockConstraint& g, std::size_t offset) {
  ClockConstraint out = g;
  for (auto& b : out) b.clock += offset;
  return out;
}

std::vector<std::string> merged_clocks(const TimedAutomaton& a, const TimedAutomaton& b) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < a.clocks().size() + b.clocks().size(); ++i)
    out.push_back("c" + std::to_string(i));
  return out;
}

}  // namespace

TimedAutomaton from_flat_mitl(const FormulaPtr& f) {
  if (!is_flat(*f))
    throw Error(Errc::unsupported_nesting, "formula '" + to_string(*f) + "' is not flat");
  return translate(f, false);
}

TimedAutomaton universal_acceptor() {
  Builder b;
  auto q = b.loc("u", true);
  b.start(q, nullptr);
  b.edge(q, q, nullptr, {});
  return b.done(false);
}

TimedAutomaton unite(const TimedAutomaton& a, const TimedAutomaton& b) {
  const std::size_t na = a.locations().size(), ca = a.clocks().size();
  std::vector<TbaLocation> locs;
  for (auto l : a.locations()) {
    l.name = "a." + l.name;
    locs.push_back(std::move(l));
  }
  for (auto l : b.locations()) {
    l.name = "b." + l.name;
    l.invariant = shifted(l.invariant, ca);
    locs.push_back(std::move(l));
  }
  std::vector<TbaEdge> edges = a.edges();
  for (auto e : b.edges()) {
    e.source += na;
    e.target += na;
    e.guard = shifted(e.guard, ca);
    for (auto& r : e.resets) r += ca;
    edges.push_back(std::move(e));
  }
  return TimedAutomaton(merged_clocks(a, b), std::move(locs), std::move(edges));
}

TimedAutomaton intersect(const TimedAutomaton& a, const TimedAutomaton& b) {
  const std::size_t ca = a.clocks().size();
  // Reachable part of (qa, qb, phase); the phase waits for F_a (0) then F_b (1).
  std::map<std::tuple<std::size_t, std::size_t, int>, std::size_t> index;
  std::vector<std::tuple<std::size_t, std::size_t, int>> states;
  std::vector<TbaLocation> locs;
  std::deque<std::size_t> work;
  auto get = [&](std::size_t qa, std::size_t qb, int ph) {
    auto key = std::make_tuple(qa, qb, ph);
    auto [it, fresh] = index.try_emplace(key, states.size());
    if (fresh) {
      states.push_back(key);
      const auto& la = a.locations()[qa];
      const auto& lb = b.locations()[qb];
      TbaLocation l;
      l.name = "(" + la.name + "," + lb.name + "," + std::to_string(ph) + ")";
      l.accepting = ph == 0 && la.accepting;
      l.invariant = la.invariant;
      for (const auto& x : shifted(lb.invariant, ca)) l.invariant.push_back(x);
      locs.push_back(std::move(l));
      work.push_back(it->second);
    }
    return it->second;
  };
  for (std::size_t qa = 0; qa < a.locations().size(); ++qa)
    for (std::size_t qb = 0; qb < b.locations().size(); ++qb) {
      const auto& la = a.locations()[qa];
      const auto& lb = b.locations()[qb];
      if (!la.initial || !lb.initial) continue;
      auto id = get(qa, qb, 0);
      locs[id].initial = true;
      locs[id].initial_letter = both(la.initial_letter, lb.initial_letter);
    }
  std::vector<TbaEdge> edges;
  while (!work.empty()) {
    const std::size_t id = work.front();
    work.pop_front();
    auto [qa, qb, ph] = states[id];
    const int next_phase = ph == 0 ? (a.locations()[qa].accepting ? 1 : 0)
                                   : (b.locations()[qb].accepting ? 0 : 1);
    for (auto ea : a.outgoing(qa))
      for (auto eb : b.outgoing(qb)) {
        const auto& x = a.edges()[ea];
        const auto& y = b.edges()[eb];
        TbaEdge e;
        e.source = id;
        e.target = get(x.target, y.target, next_phase);
        e.letter = both(x.letter, y.letter);
        e.guard = x.guard;
        for (const auto& g : shifted(y.guard, ca)) e.guard.push_back(g);
        e.resets = x.resets;
        for (auto r : y.resets) e.resets.push_back(r + ca);
        edges.push_back(std::move(e));
      }
  }
  return TimedAutomaton(merged_clocks(a, b), std::move(locs), std::move(edges));
}

namespace {

struct WordNode {
  std::size_t loc = 0;
  std::size_t pos = 0;
  std::vector<std::int64_t> clocks;  // nanosecond-quantized, max() for saturated
  bool operator==(const WordNode&) const = default;
};

struct WordNodeHash {
  std::size_t operator()(const WordNode& n) const noexcept {
    std::size_t h = n.loc * 1000003u ^ n.pos;
    for (auto c : n.clocks) h = h * 1099511628211ull ^ static_cast<std::size_t>(c);
    return h;
  }
};

constexpr std::int64_t kSaturated = std::numeric_limits<std::int64_t>::max();

std::int64_t quantize(double v) { return v == kInfinity ? kSaturated : std::llround(v * 1e9); }
double unquantize(std::int64_t q) { return q == kSaturated ? kInfinity : static_cast<double>(q) / 1e9; }

class WordGraph {
 public:
  using Node = WordNode;
  using Hash = WordNodeHash;

  WordGraph(const TimedAutomaton& a, const TimedWord& w) : a_(a), w_(w) {}

  std::vector<Node> initial() const {
    std::vector<Node> out;
    std::vector<double> zero(a_.clocks().size(), 0.0);
    for (std::size_t q = 0; q < a_.locations().size(); ++q) {
      const auto& l = a_.locations()[q];
      if (l.initial && letter_holds(l.initial_letter, w_.letter(0)) && satisfied(l.invariant, zero))
        out.push_back({q, 0, std::vector<std::int64_t>(zero.size(), 0)});
    }
    return out;
  }

  std::vector<Node> successors(const Node& n) const {
    const std::size_t next = w_.canonical(n.pos + 1);
    // Delay to the following letter; the wrap-around uses the period.
    const double delay = w_.time(n.pos + 1) - w_.time(n.pos);
    std::vector<double> v(n.clocks.size());
    for (std::size_t c = 0; c < v.size(); ++c)
      v[c] = saturate(unquantize(n.clocks[c]) + delay, a_.c_max());
    const auto& letter = w_.letter(next);
    std::vector<Node> out;
    for (auto e : a_.outgoing(n.loc)) {
      const auto& edge = a_.edges()[e];
      if (!letter_holds(edge.letter, letter) || !satisfied(edge.guard, v)) continue;
      std::vector<double> u = v;
      for (auto r : edge.resets) u[r] = 0.0;
      if (!satisfied(a_.locations()[edge.target].invariant, u)) continue;
      Node m{edge.target, next, {}};
      for (double x : u) m.clocks.push_back(quantize(x));
      out.push_back(std::move(m));
    }
    return out;
  }

  bool accepting(const Node& n) const { return a_.locations()[n.loc].accepting; }

 private:
  const TimedAutomaton& a_;
  const TimedWord& w_;
};

}  // namespace

bool accepts_lasso(const TimedAutomaton& a, const TimedWord& w, std::size_t max_nodes) {
  WordGraph g(a, w);
  return nested_dfs(g, max_nodes).has_value();
}

}  // namespace mas
