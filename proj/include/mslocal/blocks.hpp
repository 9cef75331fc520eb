#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mslocal/lattice.hpp"
#include "mslocal/model.hpp"
#include "mslocal/types.hpp"

#include "json.hpp"

namespace mslocal {

/// Knobs of the resonance test. epsilon = j0^delta by default; big_m sets the
/// small/large volume threshold exp(big_m * L_k^(2/3)).
struct ResonanceParams {
  double epsilon = 0.0;
  double delta = 1.0 / 20.0;
  double big_m = 0.0;
  double s_exponent = 0.8;  // fractional-moment exponent; kept for provenance

  static ResonanceParams for_model(double j0, int dimension, double delta = 1.0 / 20.0,
                                   double big_m_override = 0.0);

  /// Collared volume bound at scale k: exp(big_m * 2^(2/3)) for the first
  /// scale, exp(big_m * L_k^(2/3)) afterwards.
  double volume_threshold(int scale, double length_k) const;
};

/// Life-cycle of a block inside the registry. Active blocks make up the
/// current resonant region S_k; released blocks are past small blocks that
/// were diagonalized and let go, kept only as contracted groups.
enum class BlockRole { ActiveSmall, ActiveLarge, Released };

struct ResonantBlock {
  int id = -1;
  std::vector<int> core_sites;    // ascending
  std::vector<int> collar_sites;  // ascending, disjoint from core
  int scale_created = 0;
  bool is_small = true;
  BlockRole role = BlockRole::ActiveSmall;

  std::vector<int> all_sites() const;
  bool contains(int site) const;
  int volume() const { return static_cast<int>(core_sites.size() + collar_sites.size()); }
};

/// Snapshot of all blocks at one scale. Site sets (core plus collar) of
/// distinct blocks are pairwise disjoint.
class BlockRegistry {
 public:
  BlockRegistry() = default;
  explicit BlockRegistry(const LatticeGeometry& geom) : num_sites_(geom.size()) {}

  int add_block(ResonantBlock block);  // assigns the id, returns it
  const std::vector<ResonantBlock>& blocks() const { return blocks_; }
  bool empty() const { return blocks_.empty(); }

  std::optional<int> block_of(int site) const;
  const ResonantBlock* find(int id) const;

  std::vector<int> carried_large_ids() const;
  std::vector<const ResonantBlock*> active_large() const;
  std::vector<const ResonantBlock*> active_small() const;
  std::vector<const ResonantBlock*> released() const;

  /// True iff x == y or both sites belong to one block (core or collar).
  bool same_block(int x, int y) const;

  /// Demote every active small block to a released group (end of a scale).
  void release_small_blocks();

  /// Contraction map feeding ContractedMetricView: every registered block is
  /// contracted to a point, all other sites stay singletons.
  std::vector<int> contraction_labels() const;
  ContractedMetricView contracted_view(const LatticeGeometry& geom) const;

  nlohmann::json to_json() const;

 private:
  void index_block(const ResonantBlock& b);

  std::vector<ResonantBlock> blocks_;
  std::vector<int> site_to_block_;  // -1 when free
  int num_sites_ = 0;
  int next_id_ = 0;
};

/// One flagged pair from resonance detection, kept at group granularity with
/// the site pair that triggered it.
struct ResonantPair {
  int group_a = -1;
  int group_b = -1;
  int site_a = -1;
  int site_b = -1;
  int distance = 0;
  int condition = 1;  // 1: small gap, 2: coupling/gap ratio
};

/// First-scale test: nearest-neighbor pairs with |v_x - v_y| < epsilon.
std::vector<ResonantPair> detect_resonant_pairs_step1(const Hamiltonian& h,
                                                      const ResonanceParams& params);

/// General test over pairs with contracted distance d in [d_lo, d_hi). A pair
/// of groups is flagged when any state pair (x, y) across them satisfies
/// |E_x - E_y| < eps^l (condition I) or |J_xy| > (j0/eps)^l |E_x - E_y|
/// (condition II), where l = max(d, order_min) reflects that couplings
/// surviving to the scale carry at least the scale's perturbative order, no
/// matter how short the pair's distance. Groups listed in excluded_groups
/// (the carried large blocks, i.e. S_k entering the scale) never participate.
std::vector<ResonantPair> detect_resonances(const Vector& energies, const Matrix& interaction,
                                            const ContractedMetricView& view,
                                            const std::vector<char>& excluded_groups, double d_lo,
                                            double d_hi, double order_min,
                                            const ResonanceParams& params, double j0);

/// Connected components over the endpoints of the flagged pairs (whole groups
/// join, never single sites of a group). Components sharing sites with a
/// carried large block are merged into it, and the block's sites join the
/// component. Returns ascending site lists.
std::vector<std::vector<int>> form_blocks(const std::vector<ResonantPair>& pairs,
                                          const std::vector<const ResonantBlock*>& carried_large,
                                          const ContractedMetricView& view);

/// Grows a collar of contracted-metric radius floor(collar_reach - epsilon)
/// around each component, swallowing whole released groups it touches,
/// merges everything that overlaps, classifies small vs large by the collared
/// volume, and returns the registry for the scale (kept released groups
/// included). `prior` supplies the released groups and is not modified.
BlockRegistry classify_and_collar(const std::vector<std::vector<int>>& components,
                                  const BlockRegistry& prior, int scale, double collar_reach,
                                  const ResonanceParams& params, double length_k,
                                  const LatticeGeometry& geom);

/// Free-function convenience mirroring BlockRegistry::same_block.
bool same_block(int x, int y, const BlockRegistry& registry);

}  // namespace mslocal
