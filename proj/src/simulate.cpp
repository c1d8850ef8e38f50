#include "mas/simulate.hpp"

#include "mas/error.hpp"

#include <algorithm>
#include <string>

namespace mas {

namespace {

Vector rhs(const NetworkGraph& g, const Vector& x, const Vector& v) {
  const int n = g.dimension();
  Vector dx = v;
  for (const auto& e : g.edges()) {
    const Vector diff = x.segment(e.tail * n, n) - x.segment(e.head * n, n);
    dx.segment(e.tail * n, n) -= diff;
    dx.segment(e.head * n, n) += diff;
  }
  return dx;
}

void check_inside(const Workspace* w, const StackVector& x, double t) {
  if (!w) return;
  const double tol = 1e-12 * w->sides().maxCoeff();
  for (int i = 0; i < x.agents(); ++i)
    if (!w->contains(x.agent(i), tol))
      throw Error(Errc::workspace_exit,
                  "agent " + std::to_string(i + 1) + " left the workspace at t = " +
                      std::to_string(t));
}

}  // namespace

Trajectory integrate(const NetworkGraph& g, const StackVector& x0, double dt, std::size_t steps,
                     int substeps, const InputPolicy& policy, const Workspace* workspace) {
  if (substeps < 1) throw Error(Errc::invalid_argument, "substeps must be positive");
  if (!(dt > 0.0)) throw Error(Errc::invalid_argument, "dt must be positive");
  const double h = dt / substeps;
  Trajectory traj;
  traj.dt = dt;
  traj.substeps = substeps;
  traj.times.push_back(0.0);
  traj.states.push_back(x0);
  check_inside(workspace, x0, 0.0);

  Vector x = x0.values();
  for (std::size_t k = 0; k < steps; ++k) {
    const auto sample = policy(k, StackVector(x0.agents(), x0.dimension(), x));
    traj.saturated = traj.saturated || sample.clamped;
    const Vector& v = sample.v.values();
    for (int s = 0; s < substeps; ++s) {
      const Vector k1 = rhs(g, x, v);
      const Vector k2 = rhs(g, x + h / 2 * k1, v);
      const Vector k3 = rhs(g, x + h / 2 * k2, v);
      const Vector k4 = rhs(g, x + h * k3, v);
      x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      traj.inputs.push_back(sample.v);
      // Step boundaries land exactly on multiples of dt.
      const double t = s + 1 == substeps ? static_cast<double>(k + 1) * dt
                                         : static_cast<double>(k) * dt + (s + 1) * h;
      traj.times.push_back(t);
      traj.states.emplace_back(x0.agents(), x0.dimension(), x);
      check_inside(workspace, traj.states.back(), t);
    }
  }
  // The final sample keeps the last input so the two sequences align.
  if (!traj.inputs.empty()) traj.inputs.push_back(traj.inputs.back());
  else traj.inputs.push_back(StackVector(x0.agents(), x0.dimension()));
  return traj;
}

Trajectory execute_plan(const NetworkGraph& g, const CellDecomposition& cells,
                        const StackVector& x0, const Plan& plan, double v_max, int substeps,
                        std::size_t repeats) {
  const std::size_t steps = plan.prefix_length + plan.cycle_length * repeats;
  auto policy = [&](std::size_t k, const StackVector& x) {
    InputSample s{StackVector(x.agents(), x.dimension())};
    for (const auto& ap : plan.agents) {
      auto fb = feedback_input(g, cells, ap.agent, x, ap.run.at(k + 1), plan.dt, v_max);
      s.v.agent(ap.agent) = fb.v;
      s.clamped = s.clamped || fb.clamped;
    }
    return s;
  };
  return integrate(g, x0, plan.dt, steps, substeps, policy, &cells.workspace());
}

ServiceWord extract_service_word(const Trajectory& traj, const CellDecomposition& cells,
                                 const ServiceLabeling& labeling, int agent,
                                 std::span<const ServiceSet> provided) {
  ServiceWord w;
  w.agent = agent;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const CellIndex c = cells.cell_of(traj.states[k].agent(agent));
    if (w.regions.empty() || w.regions.back().cell != c) w.regions.push_back({c, traj.times[k]});
  }
  const std::size_t per_step = traj.samples_per_step();
  for (std::size_t j = 0; j < provided.size(); ++j) {
    const std::size_t k = j * per_step;
    if (k >= traj.states.size())
      throw Error(Errc::invalid_argument, "trajectory shorter than the provision schedule");
    const CellIndex c = cells.cell_of(traj.states[k].agent(agent));
    const auto& offered = labeling.labels(agent, c);
    for (const auto& s : provided[j])
      if (!offered.count(s))
        throw Error(Errc::label_mismatch, "agent " + std::to_string(agent + 1) + " provides '" + s +
                                              "' at t = " + std::to_string(traj.times[k]) +
                                              " in cell " + std::to_string(c + 1));
    w.entries.push_back({provided[j], traj.times[k], c});
  }
  return w;
}

std::vector<ServiceSet> planned_services(const AgentPlan& plan, const AgentWTS& wts,
                                         std::size_t steps) {
  std::vector<ServiceSet> out;
  for (std::size_t j = 0; j < steps; ++j) out.push_back(wts.label(plan.run.at(j)));
  return out;
}

TimedWord executed_word(const ServiceWord& w, const Plan& plan) {
  const std::size_t p = plan.prefix_length, c = plan.cycle_length;
  if (w.entries.size() < p + c)
    throw Error(Errc::invalid_argument, "service word shorter than one plan period");
  std::vector<Letter> prefix, cycle;
  for (std::size_t j = 0; j < p; ++j) prefix.push_back({w.entries[j].services, w.entries[j].time});
  for (std::size_t j = p; j < p + c; ++j) cycle.push_back({w.entries[j].services, w.entries[j].time});
  return TimedWord(std::move(prefix), std::move(cycle), static_cast<double>(c) * plan.dt);
}

BoundednessVerdict verify_boundedness(const NetworkGraph& g, const Trajectory& traj,
                                      const BoundsReport& report, double tolerance) {
  BoundednessVerdict v;
  const double limit = report.r_bar + tolerance;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const double norm = relative_state(g, traj.states[k]).norm();
    v.final_norm = norm;
    if (!v.entry_time) {
      if (norm <= limit) v.entry_time = traj.times[k];
      else continue;
    }
    v.max_norm_after_entry = std::max(v.max_norm_after_entry, norm);
    if (norm > limit && !v.first_exit) v.first_exit = traj.times[k];
  }
  v.contained = v.entry_time.has_value() && !v.first_exit.has_value();
  return v;
}

}  // namespace mas
