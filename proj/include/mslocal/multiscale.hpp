#pragma once

#include <vector>

#include "mslocal/blocks.hpp"
#include "mslocal/lattice.hpp"
#include "mslocal/model.hpp"
#include "mslocal/rotor.hpp"
#include "mslocal/types.hpp"

namespace mslocal {

/// (15/8)^k, exact products of the representable ratio.
double scale_length(int k);

/// Geometric schedule of coupling ranges plus the stopping rule.
struct Schedule {
  std::vector<double> lengths;     // L_0 .. L_{max_steps}
  double off_diag_tol = 1e-12;     // relative to ||H||_max
  int max_steps = 20;

  static Schedule standard(int max_steps = 20, double off_diag_tol = 1e-12);
  double length(int k) const;
};

struct StepMetrics {
  int step = 0;
  double length = 0.0;
  int resonant_pairs = 0;
  int blocks_total = 0;
  int blocks_small = 0;
  int blocks_large = 0;
  int largest_block = 0;
  double max_offdiag = 0.0;
  double generator_max = 0.0;
  double orth_residual = 0.0;
};

/// Evolving effective Hamiltonian diag(energies) + interaction, with the
/// cumulative rotation whose columns approximate the eigenvectors.
struct ScaleState {
  int k = 1;  // next scale to treat
  Vector energies;
  Matrix interaction;  // exactly zero diagonal
  OrthogonalRotation rotation;
  BlockRegistry registry;
  std::vector<StepMetrics> metrics;
  std::vector<char> ever_blocked;  // sites touched by an exact block rotation
};

struct PipelineContext {
  LatticeGeometry geom;
  double j0 = 0.0;
  ResonanceParams params;
  Schedule schedule;
  double h_scale = 1.0;  // max(1, ||H||_max); fixes absolute tolerances
};

PipelineContext make_context(const Hamiltonian& h, const Schedule& sched,
                             const ResonanceParams& params);

ScaleState initial_state(const Hamiltonian& h);

/// Entry-level partition of the interaction at one scale; the four parts sum
/// to the input bit-exactly.
struct InteractionSplit {
  Matrix per;   // rotated away this step
  Matrix res;   // deferred: resonant, out of range, or touching S_k
  Matrix sint;  // internal to one small collared block
  Matrix lint;  // internal to one large collared block
};

InteractionSplit split_interaction(const Vector& energies, const Matrix& interaction,
                                   const BlockRegistry& registry, const ContractedMetricView& view,
                                   const std::vector<std::vector<int>>& group_distance,
                                   double shell_hi, double order_min,
                                   const ResonanceParams& params, double j0);

/// One full scale: detection, block formation and collaring, perturbative
/// rotation by exp(-A), exact diagonalization of small blocks, diagonal
/// absorption, rotation accumulation, metrics.
ScaleState perform_step(ScaleState state, const PipelineContext& ctx);

struct FinalDiagonalization {
  Vector eigenvalues;  // indexed by state; labels maps states to sites
  OrthogonalRotation rotation;
  std::vector<int> labels;
  int steps_used = 0;
  bool cleanup_used = false;
  std::vector<StepMetrics> metrics;
  std::vector<char> ever_blocked;
  BlockRegistry registry;
  std::vector<BlockRegistry> registry_history;  // snapshot after each step
};

FinalDiagonalization run_to_convergence(const Hamiltonian& h, const Schedule& sched,
                                        const ResonanceParams& params);

/// State -> site labeling: identity on block states (their eigenvectors were
/// matched to sites lexicographically by increasing energy when the block was
/// diagonalized), greedy maximal-amplitude assignment elsewhere.
std::vector<int> assign_labels(const Matrix& rotation, const std::vector<char>& ever_blocked);

}  // namespace mslocal
