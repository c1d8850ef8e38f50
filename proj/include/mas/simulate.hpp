#pragma once

#include "mas/abstraction.hpp"
#include "mas/bounds.hpp"
#include "mas/graph.hpp"
#include "mas/mitl.hpp"
#include "mas/partition.hpp"
#include "mas/synthesis.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace mas {

struct Trajectory {
  double dt = 0.0;
  int substeps = 0;
  std::vector<double> times;          // multiples of dt / substeps
  std::vector<StackVector> states;    // one per sample time
  std::vector<StackVector> inputs;    // held from the matching sample to the next
  bool saturated = false;             // some input was clamped to v_max
  std::size_t samples_per_step() const { return static_cast<std::size_t>(substeps); }
};

struct InputSample {
  StackVector v;
  bool clamped = false;
};

// Called at every dt boundary with the measured state.
using InputPolicy = std::function<InputSample(std::size_t step, const StackVector& x)>;

// Classical RK4 with step dt/substeps. With a workspace given, leaving it throws
// WorkspaceExit.
Trajectory integrate(const NetworkGraph& g, const StackVector& x0, double dt, std::size_t steps,
                     int substeps, const InputPolicy& policy,
                     const Workspace* workspace = nullptr);

// Executes the plan's prefix and `repeats` cycles under the feedback law.
Trajectory execute_plan(const NetworkGraph& g, const CellDecomposition& cells,
                        const StackVector& x0, const Plan& plan, double v_max, int substeps,
                        std::size_t repeats = 1);

struct RegionVisit {
  CellIndex cell = 0;
  double entry_time = 0.0;
};

struct ServiceEntry {
  ServiceSet services;  // provided subset
  double time = 0.0;
  CellIndex cell = 0;   // occupied at that instant
};

struct ServiceWord {
  int agent = 0;
  std::vector<RegionVisit> regions;  // consecutive duplicates merged
  std::vector<ServiceEntry> entries; // one per dt step
};

// provided[j] is the service set offered at time j dt; it must be a subset of the
// occupied cell's label (LabelMismatch otherwise).
ServiceWord extract_service_word(const Trajectory& traj, const CellDecomposition& cells,
                                 const ServiceLabeling& labeling, int agent,
                                 std::span<const ServiceSet> provided);

// Services the plan designates per step: the WTS label of the planned cell.
std::vector<ServiceSet> planned_services(const AgentPlan& plan, const AgentWTS& wts,
                                         std::size_t steps);

// Lasso word over the first prefix + cycle entries of an executed plan.
TimedWord executed_word(const ServiceWord& w, const Plan& plan);

struct BoundednessVerdict {
  std::optional<double> entry_time;  // first sample with |x~| <= R_bar + tol
  bool contained = false;            // entered and never left afterwards
  std::optional<double> first_exit;  // first sample outside after entry
  double final_norm = 0.0;
  double max_norm_after_entry = 0.0;
};

BoundednessVerdict verify_boundedness(const NetworkGraph& g, const Trajectory& traj,
                                      const BoundsReport& report, double tolerance = 1e-6);

}  // namespace mas
