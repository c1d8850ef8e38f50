#pragma once

#include "mas/abstraction.hpp"
#include "mas/error.hpp"
#include "mas/mitl.hpp"
#include "mas/partition.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace mas {

struct Budgets {
  std::size_t max_states = 1'000'000;
  std::size_t max_iters = 10'000;
  std::size_t horizon = kDefaultHorizon;
  std::size_t max_unroll = 1000;
  std::size_t max_actions = kDefaultActionCap;
  std::size_t max_cells = kDefaultCellCap;
  std::size_t runs_per_agent = 32;
};

// Cell indices are 0-based here; scenario files number cells from 1.
struct GrantedTransition {
  int agent = 0;
  CellIndex source = 0;
  ActionTuple action;
  CellIndex target = 0;
};

// An abstraction supplied by the scenario instead of computed from the bounds.
struct GrantedAbstraction {
  double dt = 0.0;
  std::vector<Box> cells;
  std::vector<CellIndex> initial_cells;  // empty: derived from the initial positions
  std::vector<GrantedTransition> transitions;
};

struct Scenario {
  int agents = 0;
  int dimension = 0;
  std::vector<std::pair<int, int>> edges;  // 1-based
  Workspace workspace;
  std::vector<LabeledRegion> regions;
  std::vector<Vector> initial_positions;
  double v_max = 0.0;
  double lambda_reach = 0.5;
  double safety = 1.1;
  std::optional<double> r_bar;
  std::optional<double> d_max;
  std::optional<double> dt;
  std::optional<std::vector<int>> grid;  // cells per axis
  std::vector<std::string> formula_text;
  std::vector<FormulaPtr> formulas;
  Budgets budgets;
  std::uint64_t seed = 0;
  std::optional<GrantedAbstraction> abstraction;
};

// Carries every issue found; the code is SchemaError or SemanticError.
class ValidationError : public Error {
 public:
  ValidationError(Errc code, std::vector<std::string> issues);
  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  std::vector<std::string> issues_;
};

Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);

// Canonical JSON form; parse_scenario(to_json(s)) reproduces s.
nlohmann::json to_json(const Scenario& s);

}  // namespace mas
