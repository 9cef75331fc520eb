#include "mslocal/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>
#include <stdexcept>

namespace mslocal {
namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

ResonanceParams ResonanceParams::for_model(double j0, int dimension, double delta,
                                           double big_m_override) {
  ResonanceParams p;
  p.delta = delta;
  p.epsilon = j0 > 0.0 ? std::pow(j0, delta) : 0.0;
  p.big_m = big_m_override > 0.0 ? big_m_override : 2.0 * dimension;
  return p;
}

double ResonanceParams::volume_threshold(int scale, double length_k) const {
  const double arg = scale <= 1 ? std::cbrt(4.0) : std::pow(length_k, 2.0 / 3.0);
  return std::exp(big_m * arg);
}

std::vector<int> ResonantBlock::all_sites() const {
  std::vector<int> out;
  out.reserve(core_sites.size() + collar_sites.size());
  std::merge(core_sites.begin(), core_sites.end(), collar_sites.begin(), collar_sites.end(),
             std::back_inserter(out));
  return out;
}

bool ResonantBlock::contains(int site) const {
  return std::binary_search(core_sites.begin(), core_sites.end(), site) ||
         std::binary_search(collar_sites.begin(), collar_sites.end(), site);
}

int BlockRegistry::add_block(ResonantBlock block) {
  block.id = next_id_++;
  index_block(block);
  blocks_.push_back(std::move(block));
  return blocks_.back().id;
}

void BlockRegistry::index_block(const ResonantBlock& b) {
  if (site_to_block_.empty()) site_to_block_.assign(num_sites_, -1);
  for (int s : b.all_sites()) {
    if (s < 0 || s >= num_sites_) throw std::out_of_range("block site outside lattice");
    if (site_to_block_[s] != -1) throw std::logic_error("blocks must be site-disjoint");
    site_to_block_[s] = b.id;
  }
}

std::optional<int> BlockRegistry::block_of(int site) const {
  if (site < 0 || site >= num_sites_) throw std::out_of_range("site outside lattice");
  if (site_to_block_.empty() || site_to_block_[site] < 0) return std::nullopt;
  return site_to_block_[site];
}

const ResonantBlock* BlockRegistry::find(int id) const {
  for (const auto& b : blocks_)
    if (b.id == id) return &b;
  return nullptr;
}

std::vector<int> BlockRegistry::carried_large_ids() const {
  std::vector<int> out;
  for (const auto& b : blocks_)
    if (b.role == BlockRole::ActiveLarge) out.push_back(b.id);
  return out;
}

std::vector<const ResonantBlock*> BlockRegistry::active_large() const {
  std::vector<const ResonantBlock*> out;
  for (const auto& b : blocks_)
    if (b.role == BlockRole::ActiveLarge) out.push_back(&b);
  return out;
}

std::vector<const ResonantBlock*> BlockRegistry::active_small() const {
  std::vector<const ResonantBlock*> out;
  for (const auto& b : blocks_)
    if (b.role == BlockRole::ActiveSmall) out.push_back(&b);
  return out;
}

std::vector<const ResonantBlock*> BlockRegistry::released() const {
  std::vector<const ResonantBlock*> out;
  for (const auto& b : blocks_)
    if (b.role == BlockRole::Released) out.push_back(&b);
  return out;
}

bool BlockRegistry::same_block(int x, int y) const {
  if (x == y) return block_of(x).has_value();
  const auto bx = block_of(x);
  return bx.has_value() && bx == block_of(y);
}

void BlockRegistry::release_small_blocks() {
  for (auto& b : blocks_)
    if (b.role == BlockRole::ActiveSmall) b.role = BlockRole::Released;
}

std::vector<int> BlockRegistry::contraction_labels() const {
  std::vector<int> labels(num_sites_, -1);
  for (const auto& b : blocks_)
    for (int s : b.all_sites()) labels[s] = b.id;
  return labels;
}

ContractedMetricView BlockRegistry::contracted_view(const LatticeGeometry& geom) const {
  return ContractedMetricView(geom, contraction_labels());
}

nlohmann::json BlockRegistry::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& b : blocks_) {
    const char* role = b.role == BlockRole::ActiveSmall  ? "active_small"
                       : b.role == BlockRole::ActiveLarge ? "active_large"
                                                          : "released";
    out.push_back({{"id", b.id},
                   {"core", b.core_sites},
                   {"collar", b.collar_sites},
                   {"scale", b.scale_created},
                   {"is_small", b.is_small},
                   {"role", role}});
  }
  return out;
}

std::vector<ResonantPair> detect_resonant_pairs_step1(const Hamiltonian& h,
                                                      const ResonanceParams& params) {
  std::vector<ResonantPair> out;
  if (params.epsilon <= 0.0) return out;
  const auto& geom = h.geometry;
  for (int x = 0; x < geom.size(); ++x)
    for (int y : geom.neighbors(x)) {
      if (y <= x) continue;
      if (std::abs(h.potential[x] - h.potential[y]) < params.epsilon)
        out.push_back(ResonantPair{x, y, x, y, 1, 1});
    }
  return out;
}

std::vector<ResonantPair> detect_resonances(const Vector& energies, const Matrix& interaction,
                                            const ContractedMetricView& view,
                                            const std::vector<char>& excluded_groups, double d_lo,
                                            double d_hi, double order_min,
                                            const ResonanceParams& params, double j0) {
  std::vector<ResonantPair> out;
  if (params.epsilon <= 0.0) return out;
  const double ratio = j0 / params.epsilon;
  for (const auto& [ga, gb] : view.pairs_in_shell(d_lo, d_hi)) {
    if (!excluded_groups.empty() && (excluded_groups[ga] || excluded_groups[gb])) continue;
    const int d = view.group_distance(ga, gb);
    const double order = std::max(static_cast<double>(d), order_min);
    const double gap_threshold = std::pow(params.epsilon, order);
    const double ratio_threshold = std::pow(ratio, order);
    bool flagged = false;
    ResonantPair pair{ga, gb, -1, -1, d, 1};
    for (int x : view.sites_of(ga)) {
      for (int y : view.sites_of(gb)) {
        const double gap = std::abs(energies[x] - energies[y]);
        if (gap < gap_threshold) {
          pair.site_a = x;
          pair.site_b = y;
          pair.condition = 1;
          flagged = true;
          break;
        }
        if (std::abs(interaction(x, y)) > ratio_threshold * gap) {
          pair.site_a = x;
          pair.site_b = y;
          pair.condition = 2;
          flagged = true;
          break;
        }
      }
      if (flagged) break;
    }
    if (flagged) out.push_back(pair);
  }
  return out;
}

std::vector<std::vector<int>> form_blocks(const std::vector<ResonantPair>& pairs,
                                          const std::vector<const ResonantBlock*>& carried_large,
                                          const ContractedMetricView& view) {
  UnionFind uf(view.num_groups());
  std::set<int> touched;
  for (const auto& p : pairs) {
    uf.unite(p.group_a, p.group_b);
    touched.insert(p.group_a);
    touched.insert(p.group_b);
  }
  // Gather component site sets in ascending order of their root group.
  std::vector<std::vector<int>> components;
  std::vector<int> root_of_component(view.num_groups(), -1);
  for (int g : touched) {
    const int r = uf.find(g);
    int idx = root_of_component[r];
    if (idx < 0) {
      idx = static_cast<int>(components.size());
      root_of_component[r] = idx;
      components.push_back({});
    }
    auto& sites = components[idx];
    const auto& gs = view.sites_of(g);
    sites.insert(sites.end(), gs.begin(), gs.end());
  }
  for (auto& c : components) c = sorted_unique(std::move(c));

  // Components that touch a carried large block are absorbed into it.
  for (const ResonantBlock* big : carried_large) {
    const auto big_sites = big->all_sites();
    std::vector<int> merged = big_sites;
    bool hit = false;
    for (auto& c : components) {
      if (c.empty()) continue;
      std::vector<int> overlap;
      std::set_intersection(c.begin(), c.end(), big_sites.begin(), big_sites.end(),
                            std::back_inserter(overlap));
      if (!overlap.empty()) {
        merged.insert(merged.end(), c.begin(), c.end());
        c.clear();
        hit = true;
      }
    }
    if (hit) components.push_back(sorted_unique(std::move(merged)));
  }
  components.erase(std::remove_if(components.begin(), components.end(),
                                  [](const auto& c) { return c.empty(); }),
                   components.end());
  return components;
}

namespace {

/// Sites within contracted distance <= radius of the seed set. Stepping
/// between L1 neighbors costs 1; registered groups are points, so touching a
/// group brings in all of its sites at no extra cost.
std::vector<int> grow_collar(const std::vector<int>& seed, int radius,
                             const LatticeGeometry& geom,
                             const std::vector<std::vector<int>>& group_sites,
                             const std::vector<int>& group_of) {
  std::vector<int> dist(geom.size(), -1);
  std::deque<int> queue;
  auto absorb = [&](int site, int d) {
    if (dist[site] >= 0) return;
    dist[site] = d;
    queue.push_back(site);
    const int g = group_of[site];
    if (g >= 0)
      for (int mate : group_sites[g])
        if (dist[mate] < 0) {
          dist[mate] = d;
          queue.push_back(mate);
        }
  };
  for (int s : seed) absorb(s, 0);
  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop_front();
    if (dist[s] >= radius) continue;
    for (int t : geom.neighbors(s)) absorb(t, dist[s] + 1);
  }
  std::vector<int> out;
  for (int s = 0; s < geom.size(); ++s)
    if (dist[s] >= 0) out.push_back(s);
  return out;
}

}  // namespace

BlockRegistry classify_and_collar(const std::vector<std::vector<int>>& components,
                                  const BlockRegistry& prior, int scale, double collar_reach,
                                  const ResonanceParams& params, double length_k,
                                  const LatticeGeometry& geom) {
  // Collar radius: the largest whole number of lattice steps below the reach.
  const int radius = std::max(0, static_cast<int>(std::ceil(collar_reach)) - 1);

  // Released groups enter the growth as contractions and may be swallowed.
  std::vector<const ResonantBlock*> released = prior.released();
  std::vector<std::vector<int>> group_sites;
  std::vector<int> group_of(geom.size(), -1);
  for (std::size_t i = 0; i < released.size(); ++i) {
    group_sites.push_back(released[i]->all_sites());
    for (int s : group_sites.back()) group_of[s] = static_cast<int>(i);
  }

  struct Grown {
    std::vector<int> core;
    std::vector<int> sites;  // core plus collar
    int scale_created;
  };
  std::vector<Grown> grown;
  for (const auto& comp : components) {
    if (comp.empty()) continue;
    Grown g;
    g.core = sorted_unique(comp);
    g.scale_created = scale;
    grown.push_back(std::move(g));
  }
  // Carried large blocks whose sites were not already merged into a component
  // re-enter with their cores, to be re-collared at the current reach.
  for (const ResonantBlock* big : prior.active_large()) {
    bool absorbed = false;
    for (const auto& g : grown)
      if (std::binary_search(g.core.begin(), g.core.end(), big->core_sites.front())) {
        absorbed = true;
        break;
      }
    if (!absorbed) grown.push_back(Grown{big->core_sites, {}, big->scale_created});
  }

  for (auto& g : grown) g.sites = grow_collar(g.core, radius, geom, group_sites, group_of);

  // Merge anything that overlaps, then regrow until stable.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < grown.size() && !changed; ++i)
      for (std::size_t j = i + 1; j < grown.size() && !changed; ++j) {
        std::vector<int> overlap;
        std::set_intersection(grown[i].sites.begin(), grown[i].sites.end(),
                              grown[j].sites.begin(), grown[j].sites.end(),
                              std::back_inserter(overlap));
        if (overlap.empty()) continue;
        grown[i].core = sorted_unique([&] {
          std::vector<int> c = grown[i].core;
          c.insert(c.end(), grown[j].core.begin(), grown[j].core.end());
          return c;
        }());
        grown[i].scale_created = std::min(grown[i].scale_created, grown[j].scale_created);
        grown[i].sites = grow_collar(grown[i].core, radius, geom, group_sites, group_of);
        grown.erase(grown.begin() + static_cast<std::ptrdiff_t>(j));
        changed = true;
      }
  }

  // Assemble the registry: classified current blocks plus untouched released
  // groups. Swallowed released groups dissolve into the collars.
  BlockRegistry out(geom);
  const double threshold = params.volume_threshold(scale, length_k);
  std::vector<char> swallowed(released.size(), 0);
  for (const auto& g : grown)
    for (int s : g.sites)
      if (group_of[s] >= 0) swallowed[group_of[s]] = 1;

  for (std::size_t i = 0; i < released.size(); ++i)
    if (!swallowed[i]) {
      ResonantBlock keep = *released[i];
      out.add_block(std::move(keep));
    }
  for (const auto& g : grown) {
    ResonantBlock b;
    b.core_sites = g.core;
    std::set_difference(g.sites.begin(), g.sites.end(), g.core.begin(), g.core.end(),
                        std::back_inserter(b.collar_sites));
    b.scale_created = g.scale_created;
    b.is_small = static_cast<double>(b.volume()) <= threshold;
    b.role = b.is_small ? BlockRole::ActiveSmall : BlockRole::ActiveLarge;
    out.add_block(std::move(b));
  }
  return out;
}

bool same_block(int x, int y, const BlockRegistry& registry) { return registry.same_block(x, y); }

}  // namespace mslocal
