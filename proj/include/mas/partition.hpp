#pragma once

#include "mas/graph.hpp"

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace mas {

using CellIndex = std::size_t;  // 0-based internally
using ServiceSet = std::set<std::string>;

// Axis-aligned box. Membership in a decomposition is half-open; geometry is closed.
struct Box {
  Vector lower;
  Vector upper;

  static Box make(Vector lower, Vector upper);

  int dimension() const { return static_cast<int>(lower.size()); }
  Vector center() const { return (lower + upper) / 2.0; }
  Vector sides() const { return upper - lower; }
  double diameter() const { return sides().norm(); }
  double inradius() const { return sides().minCoeff() / 2.0; }
  bool contains(const Vector& p, double tol = 0.0) const;
  bool subset_of(const Box& other, double tol = 1e-12) const;
  // Intersection with nonempty interior, or nothing.
  std::optional<Box> intersect(const Box& other) const;
  // Vertices in binary-counter order (axis 0 toggles fastest).
  std::vector<Vector> vertices() const;
};

using Workspace = Box;

class CellDecomposition {
 public:
  // Uniform grid; index order has axis 0 varying fastest.
  static CellDecomposition uniform(const Workspace& w, std::vector<int> cells_per_axis);
  // Any exact partition of w into boxes.
  static CellDecomposition from_boxes(const Workspace& w, std::vector<Box> cells);

  const Workspace& workspace() const noexcept { return workspace_; }
  std::size_t size() const noexcept { return cells_.size(); }
  const Box& cell(CellIndex c) const { return cells_.at(c); }
  const std::vector<Box>& cells() const noexcept { return cells_; }
  double diameter() const noexcept { return diameter_; }
  // Set only for uniform grids.
  const std::optional<std::vector<int>>& cells_per_axis() const noexcept { return per_axis_; }

  CellIndex cell_of(const Vector& point) const;
  // Cells whose closure meets the closed query box, ascending.
  std::vector<CellIndex> cells_intersecting(const Box& query) const;

 private:
  CellDecomposition() = default;
  void index_();
  std::size_t tensor_slot_(const Vector& point) const;

  Workspace workspace_;
  std::vector<Box> cells_;
  double diameter_ = 0.0;
  std::optional<std::vector<int>> per_axis_;
  std::vector<std::vector<double>> breaks_;
  std::vector<CellIndex> lookup_;  // tensor slot -> cell
};

inline constexpr std::size_t kDefaultCellCap = 1'000'000;

CellDecomposition grid_decompose(const Workspace& w, double target_diameter,
                                 std::size_t max_cells = kDefaultCellCap);

class ServiceLabeling {
 public:
  // labels[agent][cell]; alphabets must be pairwise disjoint.
  explicit ServiceLabeling(std::vector<std::vector<ServiceSet>> labels);

  int agents() const noexcept { return static_cast<int>(labels_.size()); }
  std::size_t cell_count() const noexcept { return labels_.empty() ? 0 : labels_[0].size(); }
  const ServiceSet& labels(int agent, CellIndex c) const { return labels_.at(agent).at(c); }
  const ServiceSet& alphabet(int agent) const { return alphabets_.at(agent); }

 private:
  std::vector<std::vector<ServiceSet>> labels_;
  std::vector<ServiceSet> alphabets_;
};

struct LabeledRegion {
  Box box;
  std::vector<ServiceSet> services;  // one entry per agent
};

struct CompliantDecomposition {
  CellDecomposition cells;
  ServiceLabeling labeling;
  std::vector<CellIndex> grid_cell;  // source grid cell of each output cell
};

CompliantDecomposition refine_to_compliance(std::span<const LabeledRegion> regions,
                                            const CellDecomposition& grid, int agents);

}  // namespace mas
