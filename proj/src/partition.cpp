#include "mas/partition.hpp"

#include "mas/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mas {

namespace {

constexpr double kCoordTol = 1e-12;

// Merge coordinates that agree up to rounding.
std::vector<double> unique_sorted(std::vector<double> v, double scale) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() > kCoordTol * scale) out.push_back(x);
  return out;
}

std::size_t locate(const std::vector<double>& breaks, double x) {
  auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
  std::size_t slot = it == breaks.begin() ? 0 : static_cast<std::size_t>(it - breaks.begin()) - 1;
  return std::min(slot, breaks.size() - 2);
}

}  // namespace

Box Box::make(Vector lower, Vector upper) {
  if (lower.size() != upper.size() || lower.size() == 0)
    throw Error(Errc::dimension_mismatch, "box bounds differ in length");
  for (Eigen::Index k = 0; k < lower.size(); ++k)
    if (!(lower(k) < upper(k)))
      throw Error(Errc::invalid_argument, "box lower bound not below upper bound on axis " +
                                              std::to_string(k));
  return Box{std::move(lower), std::move(upper)};
}

bool Box::contains(const Vector& p, double tol) const {
  for (Eigen::Index k = 0; k < lower.size(); ++k)
    if (p(k) < lower(k) - tol || p(k) > upper(k) + tol) return false;
  return true;
}

bool Box::subset_of(const Box& other, double tol) const {
  for (Eigen::Index k = 0; k < lower.size(); ++k)
    if (lower(k) < other.lower(k) - tol || upper(k) > other.upper(k) + tol) return false;
  return true;
}

std::optional<Box> Box::intersect(const Box& other) const {
  Vector lo = lower.cwiseMax(other.lower);
  Vector hi = upper.cwiseMin(other.upper);
  const double scale = std::max(sides().maxCoeff(), other.sides().maxCoeff());
  for (Eigen::Index k = 0; k < lo.size(); ++k)
    if (hi(k) - lo(k) <= kCoordTol * scale) return std::nullopt;
  return Box{lo, hi};
}

std::vector<Vector> Box::vertices() const {
  const int n = dimension();
  std::vector<Vector> out;
  out.reserve(std::size_t{1} << n);
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    Vector v(n);
    for (int k = 0; k < n; ++k) v(k) = (mask >> k) & 1u ? upper(k) : lower(k);
    out.push_back(std::move(v));
  }
  return out;
}

CellDecomposition CellDecomposition::uniform(const Workspace& w, std::vector<int> cells_per_axis) {
  const int n = w.dimension();
  if (static_cast<int>(cells_per_axis.size()) != n)
    throw Error(Errc::dimension_mismatch, "cells_per_axis length");
  std::size_t total = 1;
  for (int c : cells_per_axis) {
    if (c < 1) throw Error(Errc::invalid_argument, "cells per axis must be positive");
    total *= static_cast<std::size_t>(c);
  }

  CellDecomposition d;
  d.workspace_ = w;
  d.per_axis_ = cells_per_axis;
  d.breaks_.resize(n);
  for (int k = 0; k < n; ++k) {
    auto& b = d.breaks_[k];
    const double side = (w.upper(k) - w.lower(k)) / cells_per_axis[k];
    for (int i = 0; i < cells_per_axis[k]; ++i) b.push_back(w.lower(k) + i * side);
    b.push_back(w.upper(k));
  }
  d.cells_.reserve(total);
  std::vector<int> idx(n, 0);
  for (std::size_t c = 0; c < total; ++c) {
    Vector lo(n), hi(n);
    for (int k = 0; k < n; ++k) {
      lo(k) = d.breaks_[k][idx[k]];
      hi(k) = d.breaks_[k][idx[k] + 1];
    }
    d.cells_.push_back(Box{lo, hi});
    for (int k = 0; k < n && ++idx[k] == cells_per_axis[k]; ++k) idx[k] = 0;
  }
  d.lookup_.resize(total);
  for (std::size_t c = 0; c < total; ++c) d.lookup_[c] = c;
  for (const auto& c : d.cells_) d.diameter_ = std::max(d.diameter_, c.diameter());
  return d;
}

CellDecomposition CellDecomposition::from_boxes(const Workspace& w, std::vector<Box> cells) {
  if (cells.empty()) throw Error(Errc::invalid_argument, "empty decomposition");
  CellDecomposition d;
  d.workspace_ = w;
  d.cells_ = std::move(cells);
  for (const auto& c : d.cells_) {
    if (c.dimension() != w.dimension()) throw Error(Errc::dimension_mismatch, "cell dimension");
    if (!c.subset_of(w, kCoordTol * w.sides().maxCoeff()))
      throw Error(Errc::invalid_argument, "cell outside workspace");
    d.diameter_ = std::max(d.diameter_, c.diameter());
  }
  d.index_();
  return d;
}

void CellDecomposition::index_() {
  const int n = workspace_.dimension();
  breaks_.assign(n, {});
  for (int k = 0; k < n; ++k) {
    std::vector<double> raw{workspace_.lower(k), workspace_.upper(k)};
    for (const auto& c : cells_) {
      raw.push_back(c.lower(k));
      raw.push_back(c.upper(k));
    }
    breaks_[k] = unique_sorted(std::move(raw), workspace_.sides()(k));
  }
  std::size_t slots = 1;
  for (const auto& b : breaks_) slots *= b.size() - 1;
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  lookup_.assign(slots, kNone);

  // Every tensor slot must be covered by exactly one cell.
  for (CellIndex c = 0; c < cells_.size(); ++c) {
    std::vector<std::size_t> lo(n), hi(n);
    for (int k = 0; k < n; ++k) {
      lo[k] = locate(breaks_[k], cells_[c].lower(k) + kCoordTol * workspace_.sides()(k));
      hi[k] = locate(breaks_[k], cells_[c].upper(k) - kCoordTol * workspace_.sides()(k));
    }
    std::vector<std::size_t> idx = lo;
    while (true) {
      std::size_t slot = 0, stride = 1;
      for (int k = 0; k < n; ++k) {
        slot += idx[k] * stride;
        stride *= breaks_[k].size() - 1;
      }
      if (lookup_[slot] != kNone)
        throw Error(Errc::invalid_argument, "cells " + std::to_string(lookup_[slot] + 1) +
                                                " and " + std::to_string(c + 1) + " overlap");
      lookup_[slot] = c;
      int k = 0;
      for (; k < n; ++k) {
        if (idx[k] < hi[k]) {
          ++idx[k];
          break;
        }
        idx[k] = lo[k];
      }
      if (k == n) break;
    }
  }
  if (std::find(lookup_.begin(), lookup_.end(), kNone) != lookup_.end())
    throw Error(Errc::invalid_argument, "cells do not cover the workspace");
}

std::size_t CellDecomposition::tensor_slot_(const Vector& point) const {
  std::size_t slot = 0, stride = 1;
  for (std::size_t k = 0; k < breaks_.size(); ++k) {
    slot += locate(breaks_[k], point(static_cast<Eigen::Index>(k))) * stride;
    stride *= breaks_[k].size() - 1;
  }
  return slot;
}

CellIndex CellDecomposition::cell_of(const Vector& point) const {
  if (point.size() != workspace_.dimension())
    throw Error(Errc::dimension_mismatch, "point dimension");
  if (!workspace_.contains(point, kCoordTol * workspace_.sides().maxCoeff()))
    throw Error(Errc::outside_workspace, "point outside workspace");
  return lookup_[tensor_slot_(point)];
}

std::vector<CellIndex> CellDecomposition::cells_intersecting(const Box& query) const {
  const int n = workspace_.dimension();
  std::vector<std::size_t> lo(n), hi(n);
  for (int k = 0; k < n; ++k) {
    if (query.upper(k) < workspace_.lower(k) || query.lower(k) > workspace_.upper(k)) return {};
    lo[k] = locate(breaks_[k], std::max(query.lower(k), workspace_.lower(k)));
    hi[k] = locate(breaks_[k], std::min(query.upper(k), workspace_.upper(k)));
    // A query face lying on a break also touches the slot below it.
    if (lo[k] > 0 && query.lower(k) <= breaks_[k][lo[k]]) --lo[k];
  }
  std::vector<CellIndex> out;
  std::vector<std::size_t> idx = lo;
  while (true) {
    std::size_t slot = 0, stride = 1;
    for (int k = 0; k < n; ++k) {
      slot += idx[k] * stride;
      stride *= breaks_[k].size() - 1;
    }
    out.push_back(lookup_[slot]);
    int k = 0;
    for (; k < n; ++k) {
      if (idx[k] < hi[k]) {
        ++idx[k];
        break;
      }
      idx[k] = lo[k];
    }
    if (k == n) break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

CellDecomposition grid_decompose(const Workspace& w, double target_diameter,
                                 std::size_t max_cells) {
  if (!(target_diameter > 0.0)) throw Error(Errc::invalid_argument, "target diameter");
  const int n = w.dimension();
  // Per-axis side target/sqrt(n) keeps the cell diagonal within the target.
  const double side = target_diameter / std::sqrt(static_cast<double>(n));
  std::vector<int> counts(n);
  double total = 1.0;
  for (int k = 0; k < n; ++k) {
    const double ratio = (w.upper(k) - w.lower(k)) / side;
    counts[k] = std::max(1, static_cast<int>(std::ceil(ratio - 1e-9)));
    total *= counts[k];
  }
  if (total > static_cast<double>(max_cells))
    throw Error(Errc::budget_exceeded,
                "grid needs " + std::to_string(static_cast<long long>(total)) + " cells");
  return CellDecomposition::uniform(w, counts);
}

ServiceLabeling::ServiceLabeling(std::vector<std::vector<ServiceSet>> labels)
    : labels_(std::move(labels)), alphabets_(labels_.size()) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].size() != labels_[0].size())
      throw Error(Errc::dimension_mismatch, "label table ragged");
    for (const auto& s : labels_[i]) alphabets_[i].insert(s.begin(), s.end());
  }
  for (std::size_t i = 0; i < alphabets_.size(); ++i)
    for (std::size_t j = i + 1; j < alphabets_.size(); ++j)
      for (const auto& s : alphabets_[i])
        if (alphabets_[j].count(s))
          throw Error(Errc::semantic_error, "service '" + s + "' shared by agents " +
                                                std::to_string(i + 1) + " and " +
                                                std::to_string(j + 1));
}

CompliantDecomposition refine_to_compliance(std::span<const LabeledRegion> regions,
                                            const CellDecomposition& grid, int agents) {
  const auto& w = grid.workspace();
  const int n = w.dimension();

  struct Piece {
    Box box;
    std::vector<ServiceSet> services;
  };
  std::vector<Piece> pieces;
  std::vector<Box> clipped;
  for (const auto& r : regions) {
    if (static_cast<int>(r.services.size()) != agents)
      throw Error(Errc::dimension_mismatch, "region labels per agent");
    if (auto b = r.box.intersect(w)) {
      clipped.push_back(*b);
      pieces.push_back({*b, r.services});
    }
  }

  bool overlap = false;
  for (std::size_t a = 0; a < clipped.size() && !overlap; ++a)
    for (std::size_t b = a + 1; b < clipped.size() && !overlap; ++b)
      overlap = clipped[a].intersect(clipped[b]).has_value();

  // Tensor cells over the region breakpoints cover what the regions leave open
  // (and replace the regions entirely when they overlap).
  std::vector<std::vector<double>> breaks(n);
  for (int k = 0; k < n; ++k) {
    std::vector<double> raw{w.lower(k), w.upper(k)};
    for (const auto& b : clipped) {
      raw.push_back(b.lower(k));
      raw.push_back(b.upper(k));
    }
    breaks[k] = unique_sorted(std::move(raw), w.sides()(k));
  }
  std::vector<Piece> tensor;
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    Vector lo(n), hi(n);
    for (int k = 0; k < n; ++k) {
      lo(k) = breaks[k][idx[k]];
      hi(k) = breaks[k][idx[k] + 1];
    }
    Piece p{Box{lo, hi}, std::vector<ServiceSet>(agents)};
    bool covered = false;
    for (const auto& r : pieces)
      if (p.box.subset_of(r.box, kCoordTol * w.sides().maxCoeff())) {
        covered = true;
        for (int i = 0; i < agents; ++i) p.services[i].insert(r.services[i].begin(), r.services[i].end());
      }
    if (overlap || !covered) tensor.push_back(std::move(p));
    int k = 0;
    for (; k < n; ++k) {
      if (idx[k] + 2 < breaks[k].size()) {
        ++idx[k];
        break;
      }
      idx[k] = 0;
    }
    if (k == n) break;
  }
  if (overlap) pieces = std::move(tensor);
  else pieces.insert(pieces.end(), tensor.begin(), tensor.end());

  std::vector<Box> boxes;
  std::vector<std::vector<ServiceSet>> labels(agents);
  std::vector<CellIndex> source;
  for (CellIndex g = 0; g < grid.size(); ++g)
    for (const auto& p : pieces)
      if (auto b = grid.cell(g).intersect(p.box)) {
        boxes.push_back(*b);
        source.push_back(g);
        for (int i = 0; i < agents; ++i) labels[i].push_back(p.services[i]);
      }

  const bool unchanged = boxes.size() == grid.size();
  CellDecomposition cells = unchanged ? grid : CellDecomposition::from_boxes(w, std::move(boxes));
  return {std::move(cells), ServiceLabeling(std::move(labels)), std::move(source)};
}

}  // namespace mas
