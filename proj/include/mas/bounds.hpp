#pragma once

#include "mas/graph.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mas {

struct BoundsReport {
  double k2 = 0.0;
  double r_bar = 0.0;
  double m_bound = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double l_total = 0.0;
  double v_max = 0.0;
  double lambda_reach = 0.5;
  // Human-readable notes for every hypothesis the report fails.
  std::vector<std::string> violations;
};

struct LipschitzConstants {
  double l1 = 0.0;
  double l2 = 0.0;
  double l_total = 0.0;
};

struct DiscretizationRange {
  double d_max_sup = 0.0;
  double dt_lo = 0.0;
  double dt_hi = 0.0;
  double chosen_d_max = 0.0;
  double chosen_dt = 0.0;
};

inline constexpr double kDefaultLambda = 0.5;
inline constexpr double kDefaultSafety = 1.1;

// Fills k2, r_bar, m_bound and v_max only.
BoundsReport invariance_constants(const SpectralData& s, const NetworkGraph& g, double v_max,
                                double safety = kDefaultSafety);

LipschitzConstants lipschitz_constants(const NetworkGraph& g);

// Full report. r_bar_override replaces safety*K2*v_max (and M with it); a value that
// breaks the invariance hypotheses is kept and listed under violations.
BoundsReport compute_bounds(const NetworkGraph& g, const SpectralData& s, double v_max,
                            double lambda_reach = kDefaultLambda,
                            double safety = kDefaultSafety,
                            std::optional<double> r_bar_override = std::nullopt);

std::vector<std::string> check_hypotheses(const BoundsReport& r);

DiscretizationRange discretization_range(const BoundsReport& r,
                                         std::optional<double> chosen_d_max = std::nullopt,
                                         std::optional<double> chosen_dt = std::nullopt);

// Conservative one-step deviation radius (M + v_max) L dt^2 e^{L dt}.
double remainder_bound(const BoundsReport& r, double dt);

}  // namespace mas
