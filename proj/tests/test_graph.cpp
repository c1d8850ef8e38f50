#include "mas/error.hpp"
#include "mas/graph.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mas;

namespace {

std::vector<std::pair<int, int>> one_based(const std::vector<std::pair<int, int>>& e) {
  std::vector<std::pair<int, int>> out;
  for (auto [a, b] : e) out.emplace_back(a + 1, b + 1);
  return out;
}

Errc build_error(int n, std::vector<std::pair<int, int>> edges) {
  try {
    NetworkGraph::build(n, edges, 1);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::invalid_argument;
}

}  // namespace

TEST_CASE("neighbors of small graphs") {
  std::vector<std::pair<int, int>> single{{1, 2}};
  auto g = NetworkGraph::build(2, single, 2);
  CHECK(g.neighbors(0) == std::vector<int>{1});
  CHECK(g.neighbors(1) == std::vector<int>{0});

  std::vector<std::pair<int, int>> path{{1, 2}, {2, 3}};
  auto p = NetworkGraph::build(3, path, 1);
  CHECK(p.neighbors(1) == std::vector<int>{0, 2});
  CHECK(p.degree(0) == 1);
}

TEST_CASE("construction errors") {
  CHECK(build_error(3, {{1, 2}}) == Errc::disconnected_graph);
  CHECK(build_error(2, {{1, 1}}) == Errc::self_loop);
  CHECK(build_error(2, {{1, 2}, {2, 1}}) == Errc::duplicate_edge);
  CHECK(build_error(2, {{1, 3}}) == Errc::invalid_argument);
}

TEST_CASE("spectra against closed forms") {
  auto check = [](int n, std::vector<std::pair<int, int>> e, double l2, double lmax) {
    auto g = NetworkGraph::build(n, e, 1);
    auto s = spectral(g);
    CHECK(s.lambda2 == doctest::Approx(l2).epsilon(1e-12));
    CHECK(s.lambda_max == doctest::Approx(lmax).epsilon(1e-12));
    CHECK(s.incidence_transpose_norm * s.incidence_transpose_norm ==
          doctest::Approx(s.lambda_max).epsilon(1e-12));
    CHECK((s.laplacian - s.incidence * s.incidence.transpose()).norm() < 1e-12);
  };
  check(3, {{1, 2}, {2, 3}}, 1.0, 3.0);
  check(2, {{1, 2}}, 2.0, 2.0);
  check(3, {{1, 2}, {2, 3}, {1, 3}}, 3.0, 3.0);
}

TEST_CASE("eigenvalues match an independent Jacobi solver") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const auto e = oracle::random_connected(n, rng);
    auto g = NetworkGraph::build(n, one_based(e), 1);
    auto s = spectral(g);
    const auto ref = oracle::jacobi_eigenvalues(oracle::laplacian(n, e));
    for (int k = 0; k < n; ++k) CHECK(std::abs(s.eigenvalues[k] - ref[k]) < 1e-9);
    CHECK(std::abs(ref[0]) < 1e-9);
  }
}

TEST_CASE("relative state") {
  std::vector<std::pair<int, int>> single{{1, 2}};
  auto g = NetworkGraph::build(2, single, 1);
  StackVector x(2, 1, Vector::Map(std::vector<double>{0.0, 3.0}.data(), 2));
  auto xt = relative_state(g, x);
  CHECK(xt.size() == 1);
  CHECK(xt[0] == doctest::Approx(-3.0));  // tail minus head

  std::vector<std::pair<int, int>> path{{1, 2}, {2, 3}};
  auto p = NetworkGraph::build(3, path, 1);
  StackVector y(3, 1, Vector::Map(std::vector<double>{0.0, 1.0, 3.0}.data(), 3));
  CHECK(relative_state(p, y).norm() == doctest::Approx(std::sqrt(5.0)));

  StackVector same(3, 1, Vector::Constant(3, 0.7));
  CHECK(relative_state(p, same).norm() == doctest::Approx(0.0));

  StackVector wrong(2, 1);
  CHECK_THROWS_AS(relative_state(p, wrong), Error);
}

TEST_CASE("stack vector components") {
  StackVector x(3, 2, Vector::LinSpaced(6, 1.0, 6.0));
  CHECK(x.component(0).size() == 3);
  CHECK(x.component(1)[2] == doctest::Approx(6.0));
  double sum = 0;
  for (int k = 0; k < 2; ++k) sum += x.component(k).squaredNorm();
  CHECK(sum == doctest::Approx(x.norm() * x.norm()));
  CHECK(x.agent(1)[0] == doctest::Approx(3.0));
}

TEST_CASE("Laplacian and projection inequalities on random graphs") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const int dim = 1 + static_cast<int>(rng() % 3);
    auto g = NetworkGraph::build(n, one_based(oracle::random_connected(n, rng)), dim);
    auto s = spectral(g);
    Vector v(n * dim);
    for (auto& c : v) c = normal(rng);
    StackVector x(n, dim, v);
    const auto perp = disagreement(x);
    for (int k = 0; k < dim; ++k)
      CHECK((s.laplacian * x.component(k)).norm() >= s.lambda2 * perp.component(k).norm() - 1e-9);
    const double xt = relative_state(g, x).norm();
    CHECK(perp.norm() >= xt / std::sqrt(2.0 * (n - 1)) - 1e-9);
    CHECK(xt <= s.incidence_transpose_norm * x.norm() + 1e-9);
    int min_deg = n;
    for (int i = 0; i < n; ++i) min_deg = std::min(min_deg, g.degree(i));
    CHECK(s.lambda2 <= static_cast<double>(n) / (n - 1) * min_deg + 1e-9);
  }
}
