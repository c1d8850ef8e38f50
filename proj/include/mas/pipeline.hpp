#pragma once

#include "mas/abstraction.hpp"
#include "mas/bounds.hpp"
#include "mas/graph.hpp"
#include "mas/scenario.hpp"
#include "mas/simulate.hpp"
#include "mas/synthesis.hpp"
#include "mas/tba.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mas {

enum class Subcommand { bounds, abstract, synthesize, simulate, check, tba };

struct PipelineOptions {
  std::filesystem::path out_dir = ".";
  std::optional<std::size_t> max_states;
  std::optional<std::size_t> max_iters;
  std::optional<std::size_t> horizon;
  int substeps = 8;
  std::size_t repeats = 2;  // cycles executed by simulate
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> word;  // check
  std::optional<std::string> formula;         // check, tba
};

// Everything downstream of the scenario: bounds, cells, labels and one WTS per agent.
struct Model {
  NetworkGraph graph;
  SpectralData spectral;
  BoundsReport bounds;
  DiscretizationRange disc;
  CellDecomposition cells;
  ServiceLabeling labeling;
  std::vector<CellIndex> initial_cells;
  std::vector<AgentWTS> wts;
  bool granted = false;
};

// Applies the flag overrides to the scenario budgets.
Budgets effective_budgets(const Scenario& s, const PipelineOptions& o);

// Bounds and discretization only; no cells or transitions.
struct BoundsModel {
  NetworkGraph graph;
  SpectralData spectral;
  BoundsReport bounds;
  DiscretizationRange disc;
};
BoundsModel build_bounds(const Scenario& s);

Model build_model(const Scenario& s, const Budgets& budgets);

nlohmann::json bounds_json(const BoundsModel& m);
nlohmann::json wts_line(const AgentWTS& wts, CellIndex source, const AgentTransition& t);
nlohmann::json plan_json(const Plan& plan);
nlohmann::json report_json(const SynthesisReport& r, const Model& m, std::uint64_t seed);
nlohmann::json automaton_json(const TimedAutomaton& a);

// {"prefix": [{"services": [...], "time": t}], "cycle": [...], "period": p}
TimedWord word_from_json(const nlohmann::json& j);

struct AgentVerdict {
  int agent = 0;
  bool satisfied = false;
  bool compliant = false;  // cell at every dt boundary equals the planned one
  ServiceWord word;
};

struct SimulationOutcome {
  Trajectory trajectory;
  std::vector<AgentVerdict> agents;
  BoundednessVerdict boundedness;
  bool ok() const;
};

SimulationOutcome simulate_plan(const Scenario& s, const Model& m, const Plan& plan,
                                int substeps, std::size_t repeats, std::size_t horizon);

nlohmann::json verdicts_json(const SimulationOutcome& o, const Plan& plan);
std::string trajectory_csv(const Trajectory& t);

int exit_code(Errc code) noexcept;

// Runs one subcommand, writing its artifacts under options.out_dir. Errors are
// logged and mapped to the exit status; scenario may be null for check and tba.
int run_pipeline(Subcommand cmd, const Scenario* scenario, const PipelineOptions& options);

}  // namespace mas
