#include "mas/bounds.hpp"

#include "mas/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mas {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

BoundsReport invariance_constants(const SpectralData& s, const NetworkGraph& g, double v_max,
                                double safety) {
  if (!(v_max > 0.0)) throw Error(Errc::invalid_argument, "v_max must be positive");
  if (!(safety > 1.0)) throw Error(Errc::invalid_argument, "safety factor must exceed 1");
  if (!(s.lambda2 > kConnectivityTolerance))
    throw Error(Errc::disconnected_graph, "invariance constants need a connected graph");
  const double n = g.agent_count();
  BoundsReport r;
  r.k2 = 2.0 * std::sqrt(n) * (n - 1.0) * s.incidence_transpose_norm / (s.lambda2 * s.lambda2);
  r.v_max = v_max;
  r.r_bar = safety * r.k2 * v_max;
  r.m_bound = r.r_bar;
  return r;
}

LipschitzConstants lipschitz_constants(const NetworkGraph& g) {
  int max_degree = 0;
  for (int i = 0; i < g.agent_count(); ++i) max_degree = std::max(max_degree, g.degree(i));
  LipschitzConstants c;
  c.l1 = std::sqrt(static_cast<double>(max_degree));
  c.l2 = max_degree;
  // max_i {3 L2 + 4 L1 sqrt(N_i)} is attained at the largest degree.
  c.l_total = 3.0 * c.l2 + 4.0 * c.l1 * std::sqrt(static_cast<double>(max_degree));
  return c;
}

BoundsReport compute_bounds(const NetworkGraph& g, const SpectralData& s, double v_max,
                            double lambda_reach, double safety,
                            std::optional<double> r_bar_override) {
  if (!(lambda_reach > 0.0 && lambda_reach < 1.0))
    throw Error(Errc::invalid_argument, "lambda_reach must lie in (0,1)");
  BoundsReport r = invariance_constants(s, g, v_max, safety);
  if (r_bar_override) {
    if (!(*r_bar_override > 0.0)) throw Error(Errc::invalid_argument, "r_bar must be positive");
    r.r_bar = *r_bar_override;
    r.m_bound = r.r_bar;
  }
  auto lip = lipschitz_constants(g);
  r.l1 = lip.l1;
  r.l2 = lip.l2;
  r.l_total = lip.l_total;
  r.lambda_reach = lambda_reach;
  r.violations = check_hypotheses(r);
  return r;
}

std::vector<std::string> check_hypotheses(const BoundsReport& r) {
  std::vector<std::string> out;
  if (!(r.r_bar > r.k2 * r.v_max))
    out.push_back("R_bar = " + fmt(r.r_bar) + " does not exceed K2*v_max = " +
                  fmt(r.k2 * r.v_max));
  if (!(r.m_bound > r.v_max))
    out.push_back("M = " + fmt(r.m_bound) + " does not exceed v_max = " + fmt(r.v_max));
  if (!(r.lambda_reach > 0.0 && r.lambda_reach < 1.0))
    out.push_back("lambda = " + fmt(r.lambda_reach) + " outside (0,1)");
  return out;
}

DiscretizationRange discretization_range(const BoundsReport& r, std::optional<double> chosen_d_max,
                                         std::optional<double> chosen_dt) {
  const double ml = r.m_bound * r.l_total;
  if (!(ml > 0.0)) throw Error(Errc::invalid_argument, "bounds report incomplete");
  const double a = (1.0 - r.lambda_reach) * r.v_max;

  DiscretizationRange d;
  d.d_max_sup = a * a / (4.0 * ml);
  d.chosen_d_max = chosen_d_max.value_or(d.d_max_sup / 2.0);
  if (!(d.chosen_d_max > 0.0)) throw Error(Errc::invalid_argument, "d_max must be positive");
  if (d.chosen_d_max > d.d_max_sup * (1.0 + 1e-12))
    throw Error(Errc::diameter_too_large,
                "d_max " + fmt(d.chosen_d_max) + " exceeds " + fmt(d.d_max_sup));

  // At d_max_sup the discriminant is zero up to rounding.
  const double disc = std::max(0.0, a * a - 4.0 * ml * d.chosen_d_max);
  const double root = std::sqrt(disc);
  d.dt_lo = (a - root) / (2.0 * ml);
  d.dt_hi = (a + root) / (2.0 * ml);
  d.chosen_dt = chosen_dt.value_or((d.dt_lo + d.dt_hi) / 2.0);
  const double slack = 1e-12 * d.dt_hi;
  if (d.chosen_dt < d.dt_lo - slack || d.chosen_dt > d.dt_hi + slack)
    throw Error(Errc::sampling_out_of_range, "dt " + fmt(d.chosen_dt) + " outside [" +
                                                 fmt(d.dt_lo) + ", " + fmt(d.dt_hi) + "]");
  return d;
}

double remainder_bound(const BoundsReport& r, double dt) {
  return (r.m_bound + r.v_max) * r.l_total * dt * dt * std::exp(r.l_total * dt);
}

}  // namespace mas
