#include "mas/pipeline.hpp"

#include "mas/error.hpp"

#include <fstream>
#include <sstream>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

namespace mas {

using Json = nlohmann::json;

namespace {

Json vec_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

Json cells_json(std::span<const CellIndex> cells) {
  Json a = Json::array();
  for (auto c : cells) a.push_back(c + 1);
  return a;
}

Json optional_json(const std::optional<double>& x) { return x ? Json(*x) : Json(nullptr); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::io_error, "write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const Json& j) {
  write_text(path, j.dump(2) + "\n");
}

double grid_diameter(const Workspace& w, const std::vector<int>& counts) {
  Vector side = w.sides();
  for (Eigen::Index k = 0; k < side.size(); ++k) side[k] /= counts[static_cast<std::size_t>(k)];
  return side.norm();
}

}  // namespace

Budgets effective_budgets(const Scenario& s, const PipelineOptions& o) {
  Budgets b = s.budgets;
  if (o.max_states) b.max_states = *o.max_states;
  if (o.max_iters) b.max_iters = *o.max_iters;
  if (o.horizon) b.horizon = *o.horizon;
  return b;
}

BoundsModel build_bounds(const Scenario& s) {
  auto g = NetworkGraph::build(s.agents, s.edges, s.dimension);
  auto sp = spectral(g);
  auto bounds = compute_bounds(g, sp, s.v_max, s.lambda_reach, s.safety, s.r_bar);
  DiscretizationRange disc;
  if (s.abstraction) {
    // A granted abstraction is reported against the admissible range, not held to it.
    disc = discretization_range(bounds);
    double d = 0.0;
    for (const auto& c : s.abstraction->cells) d = std::max(d, c.diameter());
    disc.chosen_d_max = d;
    disc.chosen_dt = s.abstraction->dt;
    try {
      discretization_range(bounds, d, s.abstraction->dt);
    } catch (const Error& e) {
      bounds.violations.push_back(std::string("granted abstraction: ") + e.what());
    }
  } else {
    std::optional<double> d = s.d_max;
    if (!d && s.grid) d = grid_diameter(s.workspace, *s.grid);
    disc = discretization_range(bounds, d, s.dt);
  }
  return {std::move(g), std::move(sp), std::move(bounds), disc};
}

namespace {

struct Geometry {
  CellDecomposition cells;
  ServiceLabeling labeling;
};

Geometry granted_geometry(const Scenario& s) {
  auto cells = CellDecomposition::from_boxes(s.workspace, s.abstraction->cells);
  // Each granted cell takes the services of every region holding its center.
  std::vector<std::vector<ServiceSet>> labels(static_cast<std::size_t>(s.agents),
                                              std::vector<ServiceSet>(cells.size()));
  for (CellIndex c = 0; c < cells.size(); ++c)
    for (const auto& r : s.regions)
      if (r.box.contains(cells.cell(c).center()))
        for (int a = 0; a < s.agents; ++a)
          labels[static_cast<std::size_t>(a)][c].insert(r.services[static_cast<std::size_t>(a)].begin(),
                                                        r.services[static_cast<std::size_t>(a)].end());
  return {std::move(cells), ServiceLabeling(std::move(labels))};
}

Geometry computed_geometry(const Scenario& s, const DiscretizationRange& disc,
                           const Budgets& b) {
  auto grid = s.grid ? CellDecomposition::uniform(s.workspace, *s.grid)
                     : grid_decompose(s.workspace, disc.chosen_d_max, b.max_cells);
  if (grid.diameter() > disc.chosen_d_max * (1.0 + 1e-12))
    throw Error(Errc::diameter_too_large, "grid diameter " + std::to_string(grid.diameter()) +
                                              " exceeds d_max " +
                                              std::to_string(disc.chosen_d_max));
  auto refined = refine_to_compliance(s.regions, grid, s.agents);
  return {std::move(refined.cells), std::move(refined.labeling)};
}

}  // namespace

Model build_model(const Scenario& s, const Budgets& budgets) {
  auto bm = build_bounds(s);
  auto geo = s.abstraction ? granted_geometry(s) : computed_geometry(s, bm.disc, budgets);
  spdlog::info("{} cells, diameter {}", geo.cells.size(), geo.cells.diameter());

  std::vector<CellIndex> initial;
  if (s.abstraction && !s.abstraction->initial_cells.empty()) {
    initial = s.abstraction->initial_cells;
  } else {
    for (const auto& p : s.initial_positions) initial.push_back(geo.cells.cell_of(p));
  }

  std::vector<AgentWTS> wts;
  for (int i = 0; i < s.agents; ++i) {
    const auto c0 = initial[static_cast<std::size_t>(i)];
    if (s.abstraction) {
      std::vector<ServiceSet> labels;
      for (CellIndex c = 0; c < geo.cells.size(); ++c) labels.push_back(geo.labeling.labels(i, c));
      AgentWTS w(i, bm.graph.neighbors(i), std::move(labels), c0, s.abstraction->dt);
      for (const auto& t : s.abstraction->transitions)
        if (t.agent == i) w.add_transition(t.source, t.action, t.target);
      wts.push_back(std::move(w));
    } else {
      wts.push_back(build_agent_wts(i, geo.cells, geo.labeling, bm.graph, bm.bounds, bm.disc, c0,
                                    budgets.max_actions));
    }
    spdlog::info("agent {}: {} transitions", i + 1, wts.back().transition_count());
  }
  return {std::move(bm.graph), std::move(bm.spectral), std::move(bm.bounds), bm.disc,
          std::move(geo.cells), std::move(geo.labeling), std::move(initial), std::move(wts),
          s.abstraction.has_value()};
}

Json bounds_json(const BoundsModel& m) {
  const auto& b = m.bounds;
  const auto& d = m.disc;
  return {
      {"spectral",
       {{"lambda2", m.spectral.lambda2},
        {"lambda_max", m.spectral.lambda_max},
        {"incidence_transpose_norm", m.spectral.incidence_transpose_norm}}},
      {"bounds",
       {{"k2", b.k2},
        {"r_bar", b.r_bar},
        {"m_bound", b.m_bound},
        {"l1", b.l1},
        {"l2", b.l2},
        {"l_total", b.l_total},
        {"v_max", b.v_max},
        {"lambda_reach", b.lambda_reach},
        {"violations", b.violations}}},
      {"discretization",
       {{"d_max_sup", d.d_max_sup},
        {"dt_lo", d.dt_lo},
        {"dt_hi", d.dt_hi},
        {"chosen_d_max", d.chosen_d_max},
        {"chosen_dt", d.chosen_dt},
        {"remainder_bound", remainder_bound(b, d.chosen_dt)}}},
  };
}

Json wts_line(const AgentWTS& wts, CellIndex source, const AgentTransition& t) {
  return {{"agent", wts.agent() + 1},
          {"source", source + 1},
          {"action", cells_json(t.action)},
          {"target", t.target + 1}};
}

Json plan_json(const Plan& plan) {
  Json agents = Json::array();
  for (const auto& ap : plan.agents) {
    Json ts_prefix = Json::array(), ts_cycle = Json::array();
    for (std::size_t t = 0; t < ap.run.prefix.size(); ++t)
      ts_prefix.push_back(static_cast<double>(t) * plan.dt);
    for (std::size_t k = 0; k < ap.run.cycle.size(); ++k)
      ts_cycle.push_back(static_cast<double>(ap.run.prefix.size() + k) * plan.dt);
    Json actions = Json::array(), inputs = Json::array();
    for (std::size_t t = 0; t < ap.actions.size(); ++t) {
      actions.push_back(cells_json(ap.actions[t]));
      const auto& c = ap.certificates[t];
      inputs.push_back(c ? vec_json(c->nominal_input) : Json(nullptr));
    }
    agents.push_back({{"agent", ap.agent + 1},
                      {"formula", ap.formula},
                      {"prefix", cells_json(ap.run.prefix)},
                      {"cycle", cells_json(ap.run.cycle)},
                      {"timestamps", {{"prefix", ts_prefix}, {"cycle", ts_cycle}}},
                      {"actions", actions},
                      {"inputs", inputs},
                      {"satisfaction_time", optional_json(ap.satisfaction_time)}});
  }
  return {{"dt", plan.dt},
          {"prefix_length", plan.prefix_length},
          {"cycle_length", plan.cycle_length},
          {"agents", agents}};
}

Json report_json(const SynthesisReport& r, const Model& m, std::uint64_t seed) {
  Json transitions = Json::array();
  for (const auto& w : m.wts) transitions.push_back(w.transition_count());
  return {{"step", r.step},
          {"agent_product_states", r.agent_product_states},
          {"agent_runs", r.agent_runs},
          {"combinations_tried", r.combinations_tried},
          {"joint_product_states", r.joint_product_states},
          {"cells", m.cells.size()},
          {"transitions", transitions},
          {"granted_abstraction", m.granted},
          {"bounds_violations", m.bounds.violations},
          {"seed", seed}};
}

Json automaton_json(const TimedAutomaton& a) {
  auto pred = [](const FormulaPtr& f) { return f ? to_string(*f) : std::string("true"); };
  Json locs = Json::array();
  for (const auto& l : a.locations())
    locs.push_back({{"name", l.name},
                    {"initial", l.initial},
                    {"initial_letter", pred(l.initial_letter)},
                    {"accepting", l.accepting},
                    {"invariant", describe(l.invariant, a.clocks())}});
  Json edges = Json::array();
  for (const auto& e : a.edges()) {
    Json resets = Json::array();
    for (auto r : e.resets) resets.push_back(a.clocks()[r]);
    edges.push_back({{"source", a.locations()[e.source].name},
                     {"target", a.locations()[e.target].name},
                     {"letter", pred(e.letter)},
                     {"guard", describe(e.guard, a.clocks())},
                     {"resets", resets}});
  }
  return {{"clocks", a.clocks()}, {"locations", locs}, {"edges", edges}, {"c_max", a.c_max()}};
}

TimedWord word_from_json(const Json& j) {
  auto letters = [](const Json& arr, const char* key) {
    if (!arr.is_array()) throw Error(Errc::schema_error, std::string(key) + ": expected an array");
    std::vector<Letter> out;
    for (const auto& l : arr) {
      if (!l.is_object() || !l.contains("time") || !l["time"].is_number())
        throw Error(Errc::schema_error, std::string(key) + ": letters need a numeric time");
      Letter x;
      x.time = l["time"].get<double>();
      if (l.contains("services")) x.services = l["services"].get<ServiceSet>();
      out.push_back(std::move(x));
    }
    return out;
  };
  if (!j.is_object() || !j.contains("cycle") || !j.contains("period") || !j["period"].is_number())
    throw Error(Errc::schema_error, "word file needs cycle and period");
  auto prefix = j.contains("prefix") ? letters(j["prefix"], "/prefix") : std::vector<Letter>{};
  return TimedWord(std::move(prefix), letters(j["cycle"], "/cycle"), j["period"].get<double>());
}

bool SimulationOutcome::ok() const {
  for (const auto& a : agents)
    if (!a.satisfied || !a.compliant) return false;
  return true;
}

SimulationOutcome simulate_plan(const Scenario& s, const Model& m, const Plan& plan,
                                int substeps, std::size_t repeats, std::size_t horizon) {
  if (substeps < 4) throw Error(Errc::invalid_argument, "simulation needs at least 4 substeps");
  StackVector x0(s.agents, s.dimension);
  for (int i = 0; i < s.agents; ++i) x0.agent(i) = s.initial_positions[static_cast<std::size_t>(i)];

  SimulationOutcome out{execute_plan(m.graph, m.cells, x0, plan, s.v_max, substeps, repeats), {}, {}};
  const auto& traj = out.trajectory;
  if (traj.saturated) spdlog::warn("input saturation engaged during plan execution");
  const std::size_t steps = plan.prefix_length + plan.cycle_length * repeats;

  for (const auto& ap : plan.agents) {
    AgentVerdict v;
    v.agent = ap.agent;
    v.compliant = true;
    for (std::size_t j = 0; j <= steps; ++j)
      if (m.cells.cell_of(traj.states[j * traj.samples_per_step()].agent(ap.agent)) != ap.run.at(j))
        v.compliant = false;
    const auto& wts = m.wts[static_cast<std::size_t>(ap.agent)];
    const auto provided = planned_services(ap, wts, steps + 1);
    try {
      v.word = extract_service_word(traj, m.cells, m.labeling, ap.agent, provided);
      v.satisfied = evaluate(executed_word(v.word, plan),
                             *s.formulas[static_cast<std::size_t>(ap.agent)], 0, horizon);
    } catch (const Error& e) {
      if (e.code() != Errc::label_mismatch) throw;
      spdlog::error("{}", e.what());
      v.satisfied = false;
    }
    out.agents.push_back(std::move(v));
  }
  out.boundedness = verify_boundedness(m.graph, traj, m.bounds);
  return out;
}

Json verdicts_json(const SimulationOutcome& o, const Plan& plan) {
  Json agents = Json::array();
  for (const auto& a : o.agents) {
    Json entries = Json::array(), regions = Json::array();
    for (const auto& e : a.word.entries)
      entries.push_back({{"time", e.time}, {"cell", e.cell + 1}, {"services", e.services}});
    for (const auto& r : a.word.regions)
      regions.push_back({{"cell", r.cell + 1}, {"entry_time", r.entry_time}});
    agents.push_back({{"agent", a.agent + 1},
                      {"formula", plan.agents[static_cast<std::size_t>(a.agent)].formula},
                      {"satisfied", a.satisfied},
                      {"compliant", a.compliant},
                      {"service_word", entries},
                      {"regions", regions}});
  }
  const auto& b = o.boundedness;
  return {{"agents", agents},
          {"all_satisfied", o.ok()},
          {"input_saturation", o.trajectory.saturated},
          {"boundedness",
           {{"entry_time", optional_json(b.entry_time)},
            {"contained", b.contained},
            {"first_exit", optional_json(b.first_exit)},
            {"final_norm", b.final_norm},
            {"max_norm_after_entry", b.max_norm_after_entry}}}};
}

std::string trajectory_csv(const Trajectory& t) {
  std::string out = "t";
  const int n = t.states.front().agents(), dim = t.states.front().dimension();
  for (const char* prefix : {"x", "v"})
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < dim; ++k) out += fmt::format(",{}{}_{}", prefix, i + 1, k + 1);
  out += '\n';
  for (std::size_t s = 0; s < t.times.size(); ++s) {
    out += fmt::format("{}", t.times[s]);
    for (const auto* v : {&t.states[s], &t.inputs[s]})
      for (Eigen::Index k = 0; k < v->values().size(); ++k) out += fmt::format(",{}", v->values()[k]);
    out += '\n';
  }
  return out;
}

int exit_code(Errc code) noexcept {
  switch (code) {
    case Errc::unsatisfiable: return 2;
    case Errc::budget_exceeded: return 3;
    default: return 1;
  }
}

namespace {

void write_wts(const Model& m, const std::filesystem::path& dir) {
  Json summary = {{"cells", m.cells.size()}, {"diameter", m.cells.diameter()}};
  Json agents = Json::array();
  for (const auto& w : m.wts) {
    std::string lines;
    for (CellIndex s = 0; s < w.state_count(); ++s)
      for (const auto& t : w.outgoing(s)) lines += wts_line(w, s, t).dump() + "\n";
    write_text(dir / fmt::format("wts_agent{}.jsonl", w.agent() + 1), lines);
    agents.push_back({{"agent", w.agent() + 1},
                      {"initial_cell", w.initial() + 1},
                      {"transitions", w.transition_count()}});
  }
  summary["agents"] = agents;
  write_json(dir / "abstract.json", summary);
}

SynthesisResult run_synthesis(const Scenario& s, const Model& m, const Budgets& b) {
  SynthesisOptions opts;
  opts.max_states = b.max_states;
  opts.max_iters = b.max_iters;
  opts.runs_per_agent = b.runs_per_agent;
  opts.max_unroll = b.max_unroll;
  auto r = synthesize(m.wts, s.formulas, opts);
  spdlog::info("plan found in step {}: prefix {}, cycle {}", r.report.step, r.plan.prefix_length,
               r.plan.cycle_length);
  return r;
}

int dispatch(Subcommand cmd, const Scenario* s, const PipelineOptions& o) {
  const auto& dir = o.out_dir;
  std::filesystem::create_directories(dir);

  if (cmd == Subcommand::tba) {
    if (!o.formula) throw Error(Errc::invalid_argument, "tba needs --formula");
    const auto j = automaton_json(from_flat_mitl(parse(*o.formula)));
    write_json(dir / "tba.json", j);
    fmt::print("{}\n", j.dump(2));
    return 0;
  }
  if (cmd == Subcommand::check) {
    if (!o.word) throw Error(Errc::invalid_argument, "check needs --word");
    std::string text;
    if (o.formula) text = *o.formula;
    else if (s && s->agents == 1) text = s->formula_text.front();
    else throw Error(Errc::invalid_argument, "check needs --formula");
    std::ifstream in(*o.word);
    if (!in) throw Error(Errc::io_error, "cannot open " + o.word->string());
    Json wj;
    try {
      in >> wj;
    } catch (const Json::parse_error& e) {
      throw Error(Errc::schema_error, e.what());
    }
    const auto w = word_from_json(wj);
    const auto f = parse(text);
    const bool sat = evaluate(w, *f, 0, o.horizon.value_or(kDefaultHorizon));
    write_json(dir / "check.json", {{"formula", to_string(*f)}, {"satisfied", sat}});
    fmt::print("{}\n", sat ? "satisfied" : "violated");
    return 0;
  }

  if (!s) throw Error(Errc::invalid_argument, "this subcommand needs --scenario");
  const auto budgets = effective_budgets(*s, o);
  const auto seed = o.seed.value_or(s->seed);

  if (cmd == Subcommand::bounds) {
    const auto bm = build_bounds(*s);
    for (const auto& v : bm.bounds.violations) spdlog::warn("{}", v);
    write_json(dir / "bounds.json", bounds_json(bm));
    return 0;
  }

  const auto model = build_model(*s, budgets);
  for (const auto& v : model.bounds.violations) spdlog::warn("{}", v);
  if (cmd == Subcommand::abstract) {
    write_wts(model, dir);
    return 0;
  }

  const auto result = run_synthesis(*s, model, budgets);
  write_json(dir / "plan.json", plan_json(result.plan));
  write_json(dir / "report.json", report_json(result.report, model, seed));
  if (cmd == Subcommand::synthesize) return 0;

  const auto outcome =
      simulate_plan(*s, model, result.plan, o.substeps, o.repeats, budgets.horizon);
  write_text(dir / "trajectory.csv", trajectory_csv(outcome.trajectory));
  write_json(dir / "verdicts.json", verdicts_json(outcome, result.plan));
  if (!outcome.ok()) {
    spdlog::error("executed trajectories do not satisfy every formula");
    return 1;
  }
  return 0;
}

}  // namespace

int run_pipeline(Subcommand cmd, const Scenario* scenario, const PipelineOptions& options) {
  try {
    return dispatch(cmd, scenario, options);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}

}  // namespace mas
