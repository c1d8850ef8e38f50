#include "mas/scenario.hpp"

#include "mas/bounds.hpp"
#include "mas/graph.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace mas {

namespace {

std::string join(const std::vector<std::string>& issues) {
  std::string out;
  for (const auto& s : issues) out += "\n  " + s;
  return out;
}

using Json = nlohmann::json;

// Collects schema issues keyed by JSON pointer instead of stopping at the first.
class Reader {
 public:
  std::vector<std::string> schema;
  std::vector<std::string> semantic;

  const Json* field(const Json& obj, const std::string& ptr, const char* key, bool required) {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
      if (required) schema.push_back(ptr + "/" + key + ": required field missing");
      return nullptr;
    }
    return &*it;
  }

  std::optional<double> number(const Json& obj, const std::string& ptr, const char* key,
                               bool required, bool positive = false) {
    const Json* v = field(obj, ptr, key, required);
    if (!v) return std::nullopt;
    if (!v->is_number()) {
      schema.push_back(ptr + "/" + key + ": expected a number");
      return std::nullopt;
    }
    const double x = v->get<double>();
    if (positive && !(x > 0.0)) {
      schema.push_back(ptr + "/" + key + ": must be positive");
      return std::nullopt;
    }
    return x;
  }

  std::optional<long long> integer(const Json& obj, const std::string& ptr, const char* key,
                                   bool required, long long min_value) {
    const Json* v = field(obj, ptr, key, required);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) {
      schema.push_back(ptr + "/" + key + ": expected an integer");
      return std::nullopt;
    }
    const auto x = v->get<long long>();
    if (x < min_value) {
      schema.push_back(ptr + "/" + key + ": must be at least " + std::to_string(min_value));
      return std::nullopt;
    }
    return x;
  }

  std::optional<Vector> vector(const Json& v, const std::string& ptr) {
    if (!v.is_array() || v.empty()) {
      schema.push_back(ptr + ": expected a non-empty array of numbers");
      return std::nullopt;
    }
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!v[k].is_number()) {
        schema.push_back(ptr + "/" + std::to_string(k) + ": expected a number");
        return std::nullopt;
      }
      out[static_cast<Eigen::Index>(k)] = v[k].get<double>();
    }
    return out;
  }

  std::optional<Box> box(const Json& v, const std::string& ptr, int dim) {
    if (!v.is_object()) {
      schema.push_back(ptr + ": expected an object with lower and upper");
      return std::nullopt;
    }
    const Json* lo = field(v, ptr, "lower", true);
    const Json* hi = field(v, ptr, "upper", true);
    if (!lo || !hi) return std::nullopt;
    auto l = vector(*lo, ptr + "/lower");
    auto u = vector(*hi, ptr + "/upper");
    if (!l || !u) return std::nullopt;
    if (l->size() != dim || u->size() != dim) {
      schema.push_back(ptr + ": expected " + std::to_string(dim) + " coordinates");
      return std::nullopt;
    }
    try {
      return Box::make(*l, *u);
    } catch (const Error& e) {
      semantic.push_back(ptr + ": " + e.what());
      return std::nullopt;
    }
  }

  std::optional<std::size_t> cell_number(const Json& v, const std::string& ptr, std::size_t count) {
    if (!v.is_number_integer() || v.get<long long>() < 1 ||
        static_cast<std::size_t>(v.get<long long>()) > count) {
      schema.push_back(ptr + ": expected a cell number in 1.." + std::to_string(count));
      return std::nullopt;
    }
    return static_cast<std::size_t>(v.get<long long>() - 1);
  }
};

void read_budgets(Reader& r, const Json& j, Budgets& b) {
  const Json* v = r.field(j, "", "budgets", false);
  if (!v) return;
  if (!v->is_object()) {
    r.schema.push_back("/budgets: expected an object");
    return;
  }
  auto set = [&](const char* key, std::size_t& slot) {
    if (auto x = r.integer(*v, "/budgets", key, false, 1)) slot = static_cast<std::size_t>(*x);
  };
  set("max_states", b.max_states);
  set("max_iters", b.max_iters);
  set("horizon", b.horizon);
  set("max_unroll", b.max_unroll);
  set("max_actions", b.max_actions);
  set("max_cells", b.max_cells);
  set("runs_per_agent", b.runs_per_agent);
}

std::optional<GrantedAbstraction> read_abstraction(Reader& r, const Json& j, const Scenario& s) {
  const Json* a = r.field(j, "", "abstraction", false);
  if (!a) return std::nullopt;
  if (!a->is_object()) {
    r.schema.push_back("/abstraction: expected an object");
    return std::nullopt;
  }
  GrantedAbstraction g;
  if (auto dt = r.number(*a, "/abstraction", "dt", true, true)) g.dt = *dt;
  if (const Json* cells = r.field(*a, "/abstraction", "cells", true)) {
    if (!cells->is_array() || cells->empty()) {
      r.schema.push_back("/abstraction/cells: expected a non-empty array of boxes");
    } else {
      for (std::size_t k = 0; k < cells->size(); ++k)
        if (auto b = r.box((*cells)[k], "/abstraction/cells/" + std::to_string(k), s.dimension))
          g.cells.push_back(*b);
    }
  }
  const std::size_t count = g.cells.size();
  if (const Json* init = r.field(*a, "/abstraction", "initial_cells", false)) {
    if (!init->is_array() || static_cast<int>(init->size()) != s.agents) {
      r.schema.push_back("/abstraction/initial_cells: expected one cell per agent");
    } else {
      for (std::size_t k = 0; k < init->size(); ++k)
        if (auto c = r.cell_number((*init)[k], "/abstraction/initial_cells/" + std::to_string(k),
                                   count))
          g.initial_cells.push_back(*c);
    }
  }
  if (const Json* ts = r.field(*a, "/abstraction", "transitions", true)) {
    if (!ts->is_array()) {
      r.schema.push_back("/abstraction/transitions: expected an array");
      return g;
    }
    for (std::size_t k = 0; k < ts->size(); ++k) {
      const std::string ptr = "/abstraction/transitions/" + std::to_string(k);
      const Json& t = (*ts)[k];
      GrantedTransition gt;
      auto agent = r.integer(t, ptr, "agent", true, 1);
      const Json* src = r.field(t, ptr, "source", true);
      const Json* act = r.field(t, ptr, "action", true);
      const Json* dst = r.field(t, ptr, "target", true);
      if (!agent || !src || !act || !dst) continue;
      if (*agent > s.agents) {
        r.schema.push_back(ptr + "/agent: no such agent");
        continue;
      }
      gt.agent = static_cast<int>(*agent - 1);
      auto sc = r.cell_number(*src, ptr + "/source", count);
      auto tc = r.cell_number(*dst, ptr + "/target", count);
      if (!act->is_array()) {
        r.schema.push_back(ptr + "/action: expected an array of cell numbers");
        continue;
      }
      bool ok = sc && tc;
      for (std::size_t m = 0; m < act->size(); ++m) {
        auto c = r.cell_number((*act)[m], ptr + "/action/" + std::to_string(m), count);
        if (c) gt.action.push_back(*c);
        else ok = false;
      }
      if (!ok) continue;
      gt.source = *sc;
      gt.target = *tc;
      g.transitions.push_back(std::move(gt));
    }
  }
  return g;
}

void semantic_checks(Reader& r, Scenario& s) {
  // Graph shape.
  std::optional<NetworkGraph> graph;
  try {
    graph = NetworkGraph::build(s.agents, s.edges, s.dimension);
  } catch (const Error& e) {
    r.semantic.push_back(std::string("/graph: ") + e.what());
  }

  // Alphabets are pairwise disjoint.
  std::map<std::string, int> owner;
  for (std::size_t k = 0; k < s.regions.size(); ++k)
    for (int a = 0; a < s.agents; ++a)
      for (const auto& name : s.regions[k].services[static_cast<std::size_t>(a)]) {
        auto [it, fresh] = owner.emplace(name, a);
        if (!fresh && it->second != a)
          r.semantic.push_back("/regions/" + std::to_string(k) + "/services: service '" + name +
                               "' is shared by agents " + std::to_string(it->second + 1) +
                               " and " + std::to_string(a + 1));
      }

  for (std::size_t k = 0; k < s.regions.size(); ++k)
    if (!s.regions[k].box.subset_of(s.workspace))
      r.semantic.push_back("/regions/" + std::to_string(k) + ": region leaves the workspace");
  for (std::size_t i = 0; i < s.initial_positions.size(); ++i)
    if (!s.workspace.contains(s.initial_positions[i]))
      r.semantic.push_back("/initial_positions/" + std::to_string(i) +
                           ": position outside the workspace");

  if (s.abstraction) {
    const auto& g = *s.abstraction;
    for (std::size_t k = 0; k < g.transitions.size(); ++k) {
      const auto& t = g.transitions[k];
      const std::size_t arity = graph ? graph->neighbors(t.agent).size() + 1 : t.action.size();
      if (t.action.size() != arity || t.action.front() != t.source)
        r.semantic.push_back("/abstraction/transitions/" + std::to_string(k) +
                             "/action: expected the source followed by one cell per neighbor");
    }
    return;
  }
  if (graph && r.schema.empty()) {
    try {
      const auto bounds =
          compute_bounds(*graph, spectral(*graph), s.v_max, s.lambda_reach, s.safety, s.r_bar);
      discretization_range(bounds, s.d_max, s.dt);
    } catch (const Error& e) {
      r.semantic.push_back(std::string("/d_max, /dt: ") + e.what());
    }
  }
}

}  // namespace

ValidationError::ValidationError(Errc code, std::vector<std::string> issues)
    : Error(code, "scenario validation failed:" + join(issues)), issues_(std::move(issues)) {}

Scenario parse_scenario(const Json& j) {
  Reader r;
  Scenario s;
  if (!j.is_object()) throw ValidationError(Errc::schema_error, {": expected a JSON object"});

  if (const Json* g = r.field(j, "", "graph", true)) {
    if (auto n = r.integer(*g, "/graph", "agents", true, 1)) s.agents = static_cast<int>(*n);
    if (auto d = r.integer(*g, "/graph", "dimension", true, 1)) s.dimension = static_cast<int>(*d);
    if (const Json* es = r.field(*g, "/graph", "edges", true)) {
      if (!es->is_array()) r.schema.push_back("/graph/edges: expected an array of pairs");
      else
        for (std::size_t k = 0; k < es->size(); ++k) {
          const Json& e = (*es)[k];
          if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
              !e[1].is_number_integer())
            r.schema.push_back("/graph/edges/" + std::to_string(k) + ": expected [i, j]");
          else
            s.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
        }
    }
  }
  const int dim = s.dimension;

  if (const Json* w = r.field(j, "", "workspace", true); w && dim > 0)
    if (auto b = r.box(*w, "/workspace", dim)) s.workspace = *b;

  if (const Json* regs = r.field(j, "", "regions", false); regs && dim > 0) {
    if (!regs->is_array()) r.schema.push_back("/regions: expected an array");
    else
      for (std::size_t k = 0; k < regs->size(); ++k) {
        const std::string ptr = "/regions/" + std::to_string(k);
        const Json& reg = (*regs)[k];
        auto b = r.box(reg, ptr, dim);
        LabeledRegion lr{b.value_or(Box{}), std::vector<ServiceSet>(static_cast<std::size_t>(
                                                std::max(s.agents, 0)))};
        if (const Json* sv = r.field(reg, ptr, "services", true)) {
          if (!sv->is_object()) {
            r.schema.push_back(ptr + "/services: expected an object keyed by agent number");
          } else {
            for (auto it = sv->begin(); it != sv->end(); ++it) {
              int agent = 0;
              std::istringstream in(it.key());
              if (!(in >> agent) || !in.eof() || agent < 1 || agent > s.agents) {
                r.schema.push_back(ptr + "/services/" + it.key() + ": unknown agent");
                continue;
              }
              if (!it->is_array()) {
                r.schema.push_back(ptr + "/services/" + it.key() + ": expected service names");
                continue;
              }
              for (const auto& name : *it) {
                if (!name.is_string() || name.get<std::string>().empty())
                  r.schema.push_back(ptr + "/services/" + it.key() + ": expected non-empty strings");
                else
                  lr.services[static_cast<std::size_t>(agent - 1)].insert(name.get<std::string>());
              }
            }
          }
        }
        if (b) s.regions.push_back(std::move(lr));
      }
  }

  if (const Json* ps = r.field(j, "", "initial_positions", true); ps && dim > 0) {
    if (!ps->is_array() || static_cast<int>(ps->size()) != s.agents) {
      r.schema.push_back("/initial_positions: expected one position per agent");
    } else {
      for (std::size_t k = 0; k < ps->size(); ++k) {
        auto p = r.vector((*ps)[k], "/initial_positions/" + std::to_string(k));
        if (p && p->size() != dim)
          r.schema.push_back("/initial_positions/" + std::to_string(k) + ": expected " +
                             std::to_string(dim) + " coordinates");
        else if (p)
          s.initial_positions.push_back(*p);
      }
    }
  }

  if (auto v = r.number(j, "", "v_max", true)) {
    if (*v < 0.0) r.schema.push_back("/v_max: must be non-negative");
    s.v_max = *v;
  }
  if (auto l = r.number(j, "", "lambda_reach", false)) {
    if (!(*l > 0.0 && *l < 1.0)) r.schema.push_back("/lambda_reach: must lie in (0, 1)");
    s.lambda_reach = *l;
  }
  if (auto x = r.number(j, "", "safety", false)) {
    if (!(*x > 1.0)) r.schema.push_back("/safety: must exceed 1");
    s.safety = *x;
  }
  s.r_bar = r.number(j, "", "r_bar", false, true);
  s.d_max = r.number(j, "", "d_max", false, true);
  s.dt = r.number(j, "", "dt", false, true);

  if (const Json* g = r.field(j, "", "grid", false)) {
    if (!g->is_array() || static_cast<int>(g->size()) != dim) {
      r.schema.push_back("/grid: expected cells per axis, one per dimension");
    } else {
      std::vector<int> counts;
      for (const auto& c : *g)
        if (c.is_number_integer() && c.get<int>() >= 1) counts.push_back(c.get<int>());
      if (counts.size() == g->size()) s.grid = counts;
      else r.schema.push_back("/grid: expected positive integers");
    }
  }

  if (const Json* fs = r.field(j, "", "formulas", true)) {
    if (!fs->is_array() || static_cast<int>(fs->size()) != s.agents) {
      r.schema.push_back("/formulas: expected one formula per agent");
    } else {
      for (std::size_t k = 0; k < fs->size(); ++k) {
        const std::string ptr = "/formulas/" + std::to_string(k);
        if (!(*fs)[k].is_string()) {
          r.schema.push_back(ptr + ": expected a string");
          continue;
        }
        const auto text = (*fs)[k].get<std::string>();
        s.formula_text.push_back(text);
        try {
          s.formulas.push_back(parse(text));
        } catch (const Error& e) {
          r.semantic.push_back(ptr + ": " + e.what());
        }
      }
    }
  }

  read_budgets(r, j, s.budgets);
  if (const Json* seed = r.field(j, "", "seed", false)) {
    if (!seed->is_number_unsigned()) r.schema.push_back("/seed: expected a non-negative integer");
    else s.seed = seed->get<std::uint64_t>();
  }
  if (dim > 0 && s.agents > 0) s.abstraction = read_abstraction(r, j, s);

  if (r.schema.empty()) semantic_checks(r, s);

  if (!r.schema.empty()) {
    auto all = r.schema;
    all.insert(all.end(), r.semantic.begin(), r.semantic.end());
    throw ValidationError(Errc::schema_error, std::move(all));
  }
  if (!r.semantic.empty()) throw ValidationError(Errc::semantic_error, std::move(r.semantic));
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw ValidationError(Errc::schema_error, {std::string(": ") + e.what()});
  }
  return parse_scenario(j);
}

namespace {

Json vec_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

Json box_json(const Box& b) { return {{"lower", vec_json(b.lower)}, {"upper", vec_json(b.upper)}}; }

}  // namespace

Json to_json(const Scenario& s) {
  Json j;
  Json edges = Json::array();
  for (const auto& [a, b] : s.edges) edges.push_back({a, b});
  j["graph"] = {{"agents", s.agents}, {"dimension", s.dimension}, {"edges", edges}};
  j["workspace"] = box_json(s.workspace);
  Json regions = Json::array();
  for (const auto& r : s.regions) {
    Json reg = box_json(r.box);
    Json sv = Json::object();
    for (std::size_t a = 0; a < r.services.size(); ++a)
      if (!r.services[a].empty()) sv[std::to_string(a + 1)] = r.services[a];
    reg["services"] = sv;
    regions.push_back(reg);
  }
  j["regions"] = regions;
  Json init = Json::array();
  for (const auto& p : s.initial_positions) init.push_back(vec_json(p));
  j["initial_positions"] = init;
  j["v_max"] = s.v_max;
  j["lambda_reach"] = s.lambda_reach;
  j["safety"] = s.safety;
  if (s.r_bar) j["r_bar"] = *s.r_bar;
  if (s.d_max) j["d_max"] = *s.d_max;
  if (s.dt) j["dt"] = *s.dt;
  if (s.grid) j["grid"] = *s.grid;
  j["formulas"] = s.formula_text;
  const auto& b = s.budgets;
  j["budgets"] = {{"max_states", b.max_states}, {"max_iters", b.max_iters},
                  {"horizon", b.horizon},       {"max_unroll", b.max_unroll},
                  {"max_actions", b.max_actions}, {"max_cells", b.max_cells},
                  {"runs_per_agent", b.runs_per_agent}};
  j["seed"] = s.seed;
  if (s.abstraction) {
    const auto& g = *s.abstraction;
    Json cells = Json::array();
    for (const auto& c : g.cells) cells.push_back(box_json(c));
    Json ts = Json::array();
    for (const auto& t : g.transitions) {
      Json act = Json::array();
      for (auto c : t.action) act.push_back(c + 1);
      ts.push_back({{"agent", t.agent + 1}, {"source", t.source + 1}, {"action", act},
                    {"target", t.target + 1}});
    }
    Json a = {{"dt", g.dt}, {"cells", cells}, {"transitions", ts}};
    if (!g.initial_cells.empty()) {
      Json ic = Json::array();
      for (auto c : g.initial_cells) ic.push_back(c + 1);
      a["initial_cells"] = ic;
    }
    j["abstraction"] = a;
  }
  return j;
}

}  // namespace mas
