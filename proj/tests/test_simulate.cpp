#include "mas/error.hpp"
#include "mas/pipeline.hpp"
#include "mas/simulate.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace mas;

namespace {

std::vector<std::pair<int, int>> one_based(const std::vector<std::pair<int, int>>& e) {
  std::vector<std::pair<int, int>> out;
  for (auto [a, b] : e) out.emplace_back(a + 1, b + 1);
  return out;
}

InputPolicy constant(const StackVector& v) {
  return [v](std::size_t, const StackVector&) { return InputSample{v, false}; };
}

// Random inputs with |v_i| <= v_max, redrawn at every dt boundary.
InputPolicy random_bounded(std::mt19937_64& rng, int agents, int dim, double v_max) {
  return [&rng, agents, dim, v_max](std::size_t, const StackVector&) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    StackVector v(agents, dim);
    for (int i = 0; i < agents; ++i) {
      Vector d(dim);
      for (auto& c : d) c = normal(rng);
      v.agent(i) = d.normalized() * v_max * unit(rng);
    }
    return InputSample{v, false};
  };
}

// Closed form for x' = -(L kron I) x + v with v constant, via the Laplacian eigenbasis.
Vector exact(const NetworkGraph& g, const Vector& x0, const Vector& v, double t) {
  const int n = g.agent_count(), d = g.dimension();
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : g.edges()) {
    lap(e.tail, e.tail) += 1;
    lap(e.head, e.head) += 1;
    lap(e.tail, e.head) -= 1;
    lap(e.head, e.tail) -= 1;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
  Vector out(n * d);
  for (int k = 0; k < d; ++k) {
    Vector xk(n), vk(n);
    for (int i = 0; i < n; ++i) {
      xk[i] = x0[i * d + k];
      vk[i] = v[i * d + k];
    }
    const Vector a = es.eigenvectors().transpose() * xk, b = es.eigenvectors().transpose() * vk;
    Vector y(n);
    for (int j = 0; j < n; ++j) {
      const double lam = es.eigenvalues()[j];
      const double gain = std::abs(lam) < 1e-12 ? t : (1 - std::exp(-lam * t)) / lam;
      y[j] = std::exp(-lam * t) * a[j] + gain * b[j];
    }
    const Vector z = es.eigenvectors() * y;
    for (int i = 0; i < n; ++i) out[i * d + k] = z[i];
  }
  return out;
}

struct Planned {
  Scenario s;
  Model m;
  Plan plan;
};

Planned planned(const char* file) {
  auto s = load_scenario(std::string(MAS_TEST_DATA) + "/" + file);
  auto m = build_model(s, s.budgets);
  auto r = synthesize(m.wts, s.formulas);
  return {std::move(s), std::move(m), std::move(r.plan)};
}

}  // namespace

TEST_CASE("zero input consensus never increases the disagreement") {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 5), dim = 1 + static_cast<int>(rng() % 2);
    auto g = NetworkGraph::build(n, one_based(oracle::random_connected(n, rng)), dim);
    Vector v(n * dim);
    for (auto& c : v) c = 5 * normal(rng);
    auto traj = integrate(g, StackVector(n, dim, v), 0.1, 40, 4, constant(StackVector(n, dim)));
    double prev = relative_state(g, traj.states.front()).norm();
    for (const auto& x : traj.states) {
      const double now = relative_state(g, x).norm();
      CHECK(now <= prev + 1e-12);
      prev = now;
    }
    // The centroid is invariant without inputs.
    CHECK((traj.states.back().values() - traj.states.front().values()).sum() ==
          doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("a lone agent moves in a straight line") {
  auto g = NetworkGraph::build(1, {}, 2);
  Vector x0(2), v(2);
  x0 << 1.0, -2.0;
  v << 0.3, 0.4;
  auto traj = integrate(g, StackVector(1, 2, x0), 0.5, 3, 4, constant(StackVector(1, 2, v)));
  REQUIRE(traj.states.size() == 13);
  for (std::size_t k = 0; k < traj.states.size(); ++k)
    CHECK((traj.states[k].values() - (x0 + v * traj.times[k])).norm() < 1e-14);
  CHECK(traj.times[4] == 0.5);
  CHECK(traj.times[12] == 1.5);
  CHECK(traj.inputs.size() == traj.states.size());
}

TEST_CASE("integrator matches an independent RK4 and the closed form") {
  std::mt19937_64 rng(52);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4), dim = 1 + static_cast<int>(rng() % 2);
    const auto e0 = oracle::random_connected(n, rng);
    auto g = NetworkGraph::build(n, one_based(e0), dim);
    Vector x0(n * dim), v(n * dim);
    for (auto& c : x0) c = normal(rng);
    for (auto& c : v) c = normal(rng);
    const double dt = 0.2;
    auto traj = integrate(g, StackVector(n, dim, x0), dt, 5, 8, constant(StackVector(n, dim, v)));

    oracle::Rk4 ref(n, dim, e0);
    std::vector<double> x(x0.data(), x0.data() + x0.size()), u(v.data(), v.data() + v.size());
    for (int k = 0; k < 5; ++k)
      ref.advance(x, dt, 8, [&](int, const std::vector<double>&) { return u; });
    for (int k = 0; k < n * dim; ++k) CHECK(std::abs(traj.states.back().values()[k] - x[k]) < 1e-12);

    // RK4 truncation at h = 0.025 is of order 1e-7 here.
    CHECK((traj.states.back().values() - exact(g, x0, v, 1.0)).norm() < 1e-6);
  }
}

TEST_CASE("fourth-order convergence") {
  std::vector<std::pair<int, int>> e{{1, 2}, {2, 3}};
  auto g = NetworkGraph::build(3, e, 2);
  Vector x0(6), v(6);
  x0 << -6, 0, 0, 6, 6, 0;
  v << 1, 0, 0, -1, 0.5, 0.5;
  const Vector want = exact(g, x0, v, 2.0);
  double prev = 0.0;
  for (int sub : {1, 2, 4, 8}) {
    auto traj = integrate(g, StackVector(3, 2, x0), 0.5, 4, sub, constant(StackVector(3, 2, v)));
    const double err = (traj.states.back().values() - want).norm();
    if (prev > 0.0) CHECK(prev / err > 12.0);
    prev = err;
  }
}

TEST_CASE("halving the substep barely moves the analog endpoints") {
  auto p = planned("analog2d.json");
  StackVector x0(p.s.agents, p.s.dimension);
  for (int i = 0; i < p.s.agents; ++i) x0.agent(i) = p.s.initial_positions[static_cast<std::size_t>(i)];
  auto a = execute_plan(p.m.graph, p.m.cells, x0, p.plan, p.s.v_max, 8, 2);
  auto b = execute_plan(p.m.graph, p.m.cells, x0, p.plan, p.s.v_max, 16, 2);
  CHECK((a.states.back().values() - b.states.back().values()).norm() < 1e-8);
}

TEST_CASE("executed plans follow the planned cells and formulas") {
  for (const char* file : {"oned.json", "analog2d.json"}) {
    INFO(file);
    auto p = planned(file);
    auto out = simulate_plan(p.s, p.m, p.plan, 8, 3, 100'000);
    CHECK(out.ok());
    for (const auto& a : out.agents) {
      CHECK(a.compliant);
      CHECK(a.satisfied);
      // The provided word is the WTS-predicted word at every dt boundary.
      const auto& ap = p.plan.agents[static_cast<std::size_t>(a.agent)];
      for (std::size_t j = 0; j < a.word.entries.size(); ++j) {
        CHECK(a.word.entries[j].cell == ap.run.at(j));
        CHECK(a.word.entries[j].services == p.m.wts[static_cast<std::size_t>(a.agent)].label(ap.run.at(j)));
        CHECK(a.word.entries[j].time == doctest::Approx(static_cast<double>(j) * p.plan.dt));
      }
    }
    // Inputs respect the bound at every sample.
    for (const auto& v : out.trajectory.inputs)
      for (int i = 0; i < v.agents(); ++i) CHECK(v.agent(i).norm() <= p.s.v_max * (1 + 1e-12));
  }
}

TEST_CASE("service words") {
  // Four cells on [0, 4] offering pickUp1, throw1, deliver1 and nothing.
  auto cells = CellDecomposition::uniform(Box::make(Vector::Constant(1, 0.0), Vector::Constant(1, 4.0)), {4});
  ServiceLabeling labels({{{"pickUp1"}, {"throw1"}, {"deliver1"}, {}}});
  auto g = NetworkGraph::build(1, {}, 1);
  auto traj = integrate(g, StackVector(1, 1, Vector::Constant(1, 0.5)), 1.0, 3, 4,
                        constant(StackVector(1, 1, Vector::Constant(1, 1.0))));
  std::vector<ServiceSet> provided{{"pickUp1"}, {"throw1"}, {"deliver1"}, {}};
  auto w = extract_service_word(traj, cells, labels, 0, provided);
  REQUIRE(w.regions.size() == 4);
  CHECK(w.regions[1].entry_time == doctest::Approx(0.5));
  REQUIRE(w.entries.size() == 4);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(w.entries[j].services == provided[j]);
    CHECK(w.entries[j].cell == j);
    CHECK(w.entries[j].time == doctest::Approx(static_cast<double>(j)));
  }

  // Providing less than offered is fine; providing what the cell lacks is not.
  std::vector<ServiceSet> subset{{}, {"throw1"}, {}, {}};
  CHECK_NOTHROW(extract_service_word(traj, cells, labels, 0, subset));
  std::vector<ServiceSet> wrong{{"throw1"}, {}, {}, {}};
  try {
    extract_service_word(traj, cells, labels, 0, wrong);
    FAIL("expected LabelMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::label_mismatch);
  }

  auto still = integrate(g, StackVector(1, 1, Vector::Constant(1, 2.5)), 1.0, 3, 4,
                         constant(StackVector(1, 1)));
  std::vector<ServiceSet> nothing(4);
  CHECK(extract_service_word(still, cells, labels, 0, nothing).regions.size() == 1);
}

TEST_CASE("leaving the workspace is an error") {
  auto g = NetworkGraph::build(1, {}, 1);
  Workspace ws = Box::make(Vector::Constant(1, 0.0), Vector::Constant(1, 1.0));
  try {
    integrate(g, StackVector(1, 1, Vector::Constant(1, 0.5)), 1.0, 2, 4,
              constant(StackVector(1, 1, Vector::Constant(1, 1.0))), &ws);
    FAIL("expected WorkspaceExit");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::workspace_exit);
  }
}

TEST_CASE("boundedness verdicts") {
  std::vector<std::pair<int, int>> e{{1, 2}, {2, 3}};
  auto g = NetworkGraph::build(3, e, 1);
  auto b = compute_bounds(g, spectral(g), 1.0);

  // Inside from the start with zero inputs.
  Vector inside(3);
  inside << 0.0, 1.0, 2.0;
  auto t0 = integrate(g, StackVector(3, 1, inside), 0.5, 20, 8, constant(StackVector(3, 1)));
  auto v0 = verify_boundedness(g, t0, b);
  CHECK(v0.contained);
  CHECK(v0.entry_time == 0.0);

  // Far outside: entry happens later and persists; pure consensus decays to zero.
  Vector far(3);
  far << -100.0, 0.0, 100.0;
  auto t1 = integrate(g, StackVector(3, 1, far), 0.5, 60, 8, constant(StackVector(3, 1)));
  auto v1 = verify_boundedness(g, t1, b);
  CHECK(v1.contained);
  REQUIRE(v1.entry_time);
  CHECK(*v1.entry_time > 0.0);
  CHECK(v1.final_norm < 1e-6);

  BoundsReport tight = b;
  tight.r_bar = 1e-3;
  auto v2 = verify_boundedness(g, t0, tight);
  CHECK(v2.entry_time);
  CHECK(v2.contained);
  // A trajectory that enters and leaves again.
  Trajectory bounce;
  bounce.substeps = 1;
  bounce.dt = 1.0;
  for (double s : {200.0, 1.0, 200.0}) {
    Vector x(3);
    x << 0.0, 0.0, s;
    bounce.states.emplace_back(3, 1, x);
    bounce.times.push_back(static_cast<double>(bounce.times.size()));
  }
  auto v3 = verify_boundedness(g, bounce, b);
  CHECK_FALSE(v3.contained);
  CHECK(v3.first_exit == 2.0);
}

TEST_CASE("disagreement energy falls outside the invariant set") {
  std::vector<std::pair<int, int>> e{{1, 2}, {2, 3}};
  auto g = NetworkGraph::build(3, e, 2);
  auto b = compute_bounds(g, spectral(g), 1.0);
  const double outer = b.k2 * b.v_max;
  std::mt19937_64 rng(53);
  std::normal_distribution<double> normal;
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Vector x0(6);
    for (auto& c : x0) c = 20 * normal(rng);
    auto traj = integrate(g, StackVector(3, 2, x0), 0.5, 40, 8, random_bounded(rng, 3, 2, 1.0));
    for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
      const double now = relative_state(g, traj.states[k]).norm();
      if (now <= outer) continue;
      const double next = relative_state(g, traj.states[k + 1]).norm();
      CHECK(next * next < now * now);
      ++checked;
    }
  }
  CHECK(checked > 100);
}
