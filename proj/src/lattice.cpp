#include "mslocal/lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <stdexcept>
#include <string>

namespace mslocal {

LatticeGeometry::LatticeGeometry(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw std::invalid_argument("lattice dims must be nonempty");
  size_ = 1;
  for (int d : dims_) {
    if (d <= 0) throw std::invalid_argument("lattice dims must be positive");
    size_ *= d;
  }
  // Row-major strides: the flat index sorts sites lexicographically by coords.
  strides_.assign(dims_.size(), 1);
  for (int mu = static_cast<int>(dims_.size()) - 2; mu >= 0; --mu)
    strides_[mu] = strides_[mu + 1] * dims_[mu + 1];
}

void LatticeGeometry::check(int site) const {
  if (!valid(site))
    throw std::out_of_range("site index " + std::to_string(site) + " outside lattice of size " +
                            std::to_string(size_));
}

std::vector<int> LatticeGeometry::coords(int site) const {
  check(site);
  std::vector<int> c(dims_.size());
  for (std::size_t mu = 0; mu < dims_.size(); ++mu) {
    c[mu] = site / strides_[mu];
    site -= c[mu] * strides_[mu];
  }
  return c;
}

int LatticeGeometry::flat_index(const std::vector<int>& c) const {
  if (c.size() != dims_.size()) throw std::invalid_argument("coordinate dimension mismatch");
  int site = 0;
  for (std::size_t mu = 0; mu < dims_.size(); ++mu) {
    if (c[mu] < 0 || c[mu] >= dims_[mu]) throw std::out_of_range("coordinate outside lattice box");
    site += c[mu] * strides_[mu];
  }
  return site;
}

int LatticeGeometry::l1_distance(int a, int b) const {
  check(a);
  check(b);
  int dist = 0;
  for (std::size_t mu = 0; mu < dims_.size(); ++mu) {
    const int ca = a / strides_[mu] % dims_[mu];
    const int cb = b / strides_[mu] % dims_[mu];
    dist += std::abs(ca - cb);
  }
  return dist;
}

std::vector<int> LatticeGeometry::neighbors(int site) const {
  check(site);
  std::vector<int> out;
  out.reserve(2 * dims_.size());
  for (std::size_t mu = 0; mu < dims_.size(); ++mu) {
    const int c = site / strides_[mu] % dims_[mu];
    if (c > 0) out.push_back(site - strides_[mu]);
    if (c + 1 < dims_[mu]) out.push_back(site + strides_[mu]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

ContractedMetricView::ContractedMetricView(const LatticeGeometry& geom,
                                           const std::vector<int>& group_label)
    : geom_(&geom) {
  if (static_cast<int>(group_label.size()) != geom.size())
    throw std::invalid_argument("contraction map must label every site");
  group_of_.assign(group_label.size(), -1);
  // Compact labels in order of first appearance; negative labels are singletons.
  std::vector<std::pair<int, int>> seen;  // (raw label, compact id)
  for (int s = 0; s < geom.size(); ++s) {
    const int raw = group_label[s];
    if (raw < 0) {
      group_of_[s] = static_cast<int>(group_sites_.size());
      group_sites_.push_back({s});
      continue;
    }
    int id = -1;
    for (const auto& [r, i] : seen)
      if (r == raw) id = i;
    if (id < 0) {
      id = static_cast<int>(group_sites_.size());
      seen.emplace_back(raw, id);
      group_sites_.push_back({});
    }
    group_of_[s] = id;
    group_sites_[id].push_back(s);
  }
  group_adj_.assign(group_sites_.size(), {});
  for (int s = 0; s < geom.size(); ++s)
    for (int t : geom.neighbors(s)) {
      if (t <= s) continue;
      const int ga = group_of_[s], gb = group_of_[t];
      if (ga == gb) continue;
      group_adj_[ga].push_back(gb);
      group_adj_[gb].push_back(ga);
    }
  for (auto& adj : group_adj_) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
  }
}

ContractedMetricView ContractedMetricView::trivial(const LatticeGeometry& geom) {
  return ContractedMetricView(geom, std::vector<int>(geom.size(), -1));
}

int ContractedMetricView::group_of(int site) const {
  if (!geom_->valid(site)) throw std::out_of_range("site outside lattice");
  return group_of_[site];
}

std::vector<int> ContractedMetricView::distances_from(int group) const {
  std::vector<int> dist(group_sites_.size(), -1);
  std::deque<int> queue;
  dist[group] = 0;
  queue.push_back(group);
  while (!queue.empty()) {
    const int g = queue.front();
    queue.pop_front();
    for (int h : group_adj_[g])
      if (dist[h] < 0) {
        dist[h] = dist[g] + 1;
        queue.push_back(h);
      }
  }
  return dist;
}

int ContractedMetricView::group_distance(int ga, int gb) const {
  if (ga == gb) return 0;
  const auto dist = distances_from(ga);
  if (dist[gb] < 0) throw std::logic_error("contracted graph is disconnected");
  return dist[gb];
}

int ContractedMetricView::distance(int site_a, int site_b) const {
  return group_distance(group_of(site_a), group_of(site_b));
}

std::vector<std::vector<int>> ContractedMetricView::all_group_distances() const {
  std::vector<std::vector<int>> table(group_sites_.size());
  for (int g = 0; g < num_groups(); ++g) table[g] = distances_from(g);
  return table;
}

std::vector<std::pair<int, int>> ContractedMetricView::pairs_in_shell(double d_lo,
                                                                      double d_hi) const {
  if (!(d_lo >= 0.0) || !(d_lo < d_hi)) throw std::invalid_argument("need 0 <= d_lo < d_hi");
  std::vector<std::pair<int, int>> out;
  for (int g = 0; g < num_groups(); ++g) {
    const auto dist = distances_from(g);
    for (int h = g + 1; h < num_groups(); ++h)
      if (dist[h] > 0 && dist[h] >= d_lo && dist[h] < d_hi) out.emplace_back(g, h);
  }
  return out;
}

}  // namespace mslocal
