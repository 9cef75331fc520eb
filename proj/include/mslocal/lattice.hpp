#pragma once

#include <utility>
#include <vector>

namespace mslocal {

/// Rectangular subset of Z^D with row-major (lexicographic) flat indexing,
/// L1 metric and open boundaries.
class LatticeGeometry {
 public:
  explicit LatticeGeometry(std::vector<int> dims);

  int dimension() const { return static_cast<int>(dims_.size()); }
  int size() const { return size_; }
  const std::vector<int>& dims() const { return dims_; }

  /// Coordinates of a flat site index; inverse of flat_index().
  std::vector<int> coords(int site) const;
  int flat_index(const std::vector<int>& c) const;

  /// Sum over axes of |x_mu - y_mu|.
  int l1_distance(int a, int b) const;

  /// Flat indices of the L1-adjacent sites inside the box, ascending.
  std::vector<int> neighbors(int site) const;

  bool valid(int site) const { return site >= 0 && site < size_; }

 private:
  void check(int site) const;

  std::vector<int> dims_;
  std::vector<int> strides_;
  int size_ = 0;
};

/// Lattice metric after contracting disjoint site groups (resonant blocks)
/// to points. Distance is the shortest path in the quotient graph: an edge
/// of length 1 joins groups containing L1-adjacent sites, and sites of one
/// group sit at distance 0 from each other. With the trivial contraction the
/// distance coincides with the L1 distance.
class ContractedMetricView {
 public:
  /// group_label[site] identifies the group of each site. Negative labels
  /// mean "own singleton group". Labels are compacted to ids 0..G-1 in order
  /// of first appearance by site index.
  ContractedMetricView(const LatticeGeometry& geom, const std::vector<int>& group_label);

  static ContractedMetricView trivial(const LatticeGeometry& geom);

  const LatticeGeometry& geometry() const { return *geom_; }
  int num_groups() const { return static_cast<int>(group_sites_.size()); }
  int group_of(int site) const;
  const std::vector<int>& sites_of(int group) const { return group_sites_[group]; }
  /// True when the group is a contracted block rather than a lone site.
  bool is_aggregate(int group) const { return group_sites_[group].size() > 1; }

  /// Contracted pseudo-metric between sites (0 within a group).
  int distance(int site_a, int site_b) const;
  int group_distance(int ga, int gb) const;

  /// BFS distances from one group to every group.
  std::vector<int> distances_from(int group) const;

  /// Full group-to-group distance table (BFS per group).
  std::vector<std::vector<int>> all_group_distances() const;

  /// Unordered pairs of distinct groups whose distance d obeys
  /// d_lo <= d < d_hi, each listed once with first id < second id.
  std::vector<std::pair<int, int>> pairs_in_shell(double d_lo, double d_hi) const;

 private:
  const LatticeGeometry* geom_;
  std::vector<int> group_of_;
  std::vector<std::vector<int>> group_sites_;
  std::vector<std::vector<int>> group_adj_;
};

}  // namespace mslocal
