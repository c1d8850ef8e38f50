#include "mas/synthesis.hpp"

#include "mas/error.hpp"

#include <algorithm>
#include <numeric>

namespace mas {

AlignedRuns align(std::span<const Run> runs, std::size_t max_unroll) {
  AlignedRuns out;
  out.cycle_length = 1;
  for (const auto& r : runs) {
    if (r.cycle.empty()) throw Error(Errc::invalid_argument, "run with an empty cycle");
    out.prefix_length = std::max(out.prefix_length, r.prefix.size());
    out.cycle_length = std::lcm(out.cycle_length, r.cycle.size());
    if (out.cycle_length > max_unroll)
      throw Error(Errc::length_mismatch, "cycle alignment needs " +
                                             std::to_string(out.cycle_length) + " steps");
  }
  for (const auto& r : runs) {
    Run a;
    for (std::size_t t = 0; t < out.prefix_length; ++t) a.prefix.push_back(r.at(t));
    for (std::size_t k = 0; k < out.cycle_length; ++k)
      a.cycle.push_back(r.at(out.prefix_length + k));
    out.runs.push_back(std::move(a));
  }
  return out;
}

namespace {

ProductWTS::State joint_at(const AlignedRuns& a, std::size_t t) {
  ProductWTS::State s;
  for (const auto& r : a.runs) s.push_back(r.at(t));
  return s;
}

std::size_t successor_step(const AlignedRuns& a, std::size_t t) {
  return t + 1 < a.prefix_length + a.cycle_length ? t + 1 : a.prefix_length;
}

bool aligned_consistent(const AlignedRuns& a, const ProductWTS& p) {
  if (joint_at(a, 0) != p.initial()) return false;
  for (std::size_t t = 0; t < a.prefix_length + a.cycle_length; ++t)
    if (!p.is_transition(joint_at(a, t), joint_at(a, successor_step(a, t)))) return false;
  return true;
}

}  // namespace

bool consistent(std::span<const Run> runs, const ProductWTS& p, std::size_t max_unroll) {
  if (runs.size() != p.agents()) throw Error(Errc::arity_mismatch, "one run per agent expected");
  return aligned_consistent(align(runs, max_unroll), p);
}

TimedWord run_word(const Run& r, const AgentWTS& wts) {
  const double dt = wts.dt();
  std::vector<Letter> prefix, cycle;
  for (std::size_t t = 0; t < r.prefix.size(); ++t)
    prefix.push_back({wts.label(r.prefix[t]), static_cast<double>(t) * dt});
  for (std::size_t k = 0; k < r.cycle.size(); ++k)
    cycle.push_back({wts.label(r.cycle[k]), static_cast<double>(r.prefix.size() + k) * dt});
  return TimedWord(std::move(prefix), std::move(cycle), static_cast<double>(r.cycle.size()) * dt);
}

std::optional<double> satisfaction_time(const Formula& f, const Run& r, const AgentWTS& wts,
                                        std::size_t horizon) {
  if (f.op != Op::eventually || !is_propositional(*f.left)) return std::nullopt;
  const double dt = wts.dt();
  std::size_t settled = 0;
  for (std::size_t j = 0; j <= horizon; ++j) {
    const double t = static_cast<double>(j) * dt;
    if (f.interval.beyond(t)) break;
    if (f.interval.contains(t) && holds(*f.left, wts.label(r.at(j)))) return t;
    // A whole cycle inside an unbounded window without a witness settles it.
    if (!f.interval.bounded() && j >= r.prefix.size() && !f.interval.below(t) &&
        ++settled >= r.cycle.size())
      break;
  }
  return std::nullopt;
}

namespace {

Plan make_plan(const AlignedRuns& a, std::span<const AgentWTS> agents,
               std::span<const FormulaPtr> formulas, const ProductWTS& p) {
  Plan plan;
  plan.dt = p.dt();
  plan.prefix_length = a.prefix_length;
  plan.cycle_length = a.cycle_length;
  const std::size_t steps = a.prefix_length + a.cycle_length;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    AgentPlan ap;
    ap.agent = static_cast<int>(i);
    ap.formula = to_string(*formulas[i]);
    ap.run = a.runs[i];
    for (std::size_t t = 0; t < steps; ++t) {
      auto action = p.projection(static_cast<int>(i), joint_at(a, t));
      const CellIndex next = a.runs[i].at(successor_step(a, t));
      const auto* cert = agents[i].certificate(action, next);
      ap.certificates.push_back(cert ? std::optional<TransitionCertificate>(*cert) : std::nullopt);
      ap.actions.push_back(std::move(action));
    }
    ap.satisfaction_time = satisfaction_time(*formulas[i], ap.run, agents[i]);
    plan.agents.push_back(std::move(ap));
  }
  return plan;
}

}  // namespace

SynthesisResult synthesize(std::span<const AgentWTS> agents, std::span<const FormulaPtr> formulas,
                           const SynthesisOptions& options) {
  if (agents.size() != formulas.size())
    throw Error(Errc::arity_mismatch, "one formula per agent expected");
  const std::size_t n = agents.size();

  // Step 1: one automaton per agent.
  std::vector<TimedAutomaton> automata;
  for (const auto& f : formulas) automata.push_back(from_flat_mitl(f));

  ProductWTS product(agents);
  SynthesisResult result;
  auto& report = result.report;

  if (!options.skip_combination) {
    // Step 2: accepting runs per agent, shortest prefixes first.
    std::vector<std::vector<Run>> candidates(n);
    for (std::size_t i = 0; i < n; ++i) {
      BuchiProduct<AgentView> b(AgentView(agents[i]), automata[i]);
      SearchStats stats;
      auto lassos = enumerate_lassos(b, options.runs_per_agent * 4, options.max_states, &stats);
      report.agent_product_states.push_back(stats.states);
      for (const auto& l : lassos) {
        Run r = project(l);
        if (std::find(candidates[i].begin(), candidates[i].end(), r) == candidates[i].end())
          candidates[i].push_back(std::move(r));
        if (candidates[i].size() >= options.runs_per_agent) break;
      }
      report.agent_runs.push_back(candidates[i].size());
    }

    // Step 3: lexicographic combinations, last agent varying fastest.
    const bool any_empty = std::any_of(candidates.begin(), candidates.end(),
                                       [](const auto& c) { return c.empty(); });
    std::vector<std::size_t> idx(n, 0);
    while (!any_empty && report.combinations_tried < options.max_iters) {
      ++report.combinations_tried;
      std::vector<Run> pick;
      for (std::size_t i = 0; i < n; ++i) pick.push_back(candidates[i][idx[i]]);
      try {
        auto aligned = align(pick, options.max_unroll);
        if (aligned_consistent(aligned, product)) {
          report.step = 3;
          result.plan = make_plan(aligned, agents, formulas, product);
          return result;
        }
      } catch (const Error& e) {
        if (e.code() != Errc::length_mismatch) throw;
      }
      std::size_t k = n;
      while (k-- > 0) {
        if (++idx[k] < candidates[k].size()) break;
        idx[k] = 0;
      }
      if (k == static_cast<std::size_t>(-1)) break;
    }
  }

  // Step 4: the conjunction over the joint product.
  TimedAutomaton joint = automata.front();
  for (std::size_t i = 1; i < n; ++i) joint = intersect(joint, automata[i]);
  BuchiProduct<JointView> b(JointView(product), joint);
  SearchStats stats;
  auto lasso = find_accepting_lasso(b, options.max_states, &stats);
  report.joint_product_states = stats.states;
  if (!lasso) throw Error(Errc::unsatisfiable, "no accepting run of the joint product exists");

  std::vector<Run> runs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& s : lasso->prefix) runs[i].prefix.push_back(s.state[i]);
    for (const auto& s : lasso->cycle) runs[i].cycle.push_back(s.state[i]);
  }
  report.step = 4;
  result.plan = make_plan(align(runs, options.max_unroll), agents, formulas, product);
  return result;
}

}  // namespace mas
