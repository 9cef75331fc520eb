#include "mslocal/multiscale.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mslocal {

double scale_length(int k) {
  if (k < 0) throw std::invalid_argument("scale index must be nonnegative");
  double length = 1.0;
  for (int i = 0; i < k; ++i) length *= 15.0 / 8.0;
  return length;
}

Schedule Schedule::standard(int max_steps, double off_diag_tol) {
  Schedule s;
  s.max_steps = max_steps;
  s.off_diag_tol = off_diag_tol;
  s.lengths.resize(max_steps + 2);
  s.lengths[0] = 1.0;
  for (int k = 1; k <= max_steps + 1; ++k) s.lengths[k] = s.lengths[k - 1] * (15.0 / 8.0);
  return s;
}

double Schedule::length(int k) const {
  if (k < 0 || k >= static_cast<int>(lengths.size()))
    throw std::out_of_range("schedule length index");
  return lengths[k];
}

PipelineContext make_context(const Hamiltonian& h, const Schedule& sched,
                             const ResonanceParams& params) {
  PipelineContext ctx{h.geometry, h.j0, params, sched, 1.0};
  ctx.h_scale = std::max(1e-300, h.matrix.cwiseAbs().maxCoeff());
  return ctx;
}

ScaleState initial_state(const Hamiltonian& h) {
  ScaleState s;
  s.k = 1;
  s.energies = h.potential;
  s.interaction = h.matrix;
  s.interaction.diagonal().setZero();
  s.rotation = OrthogonalRotation::identity(h.geometry.size());
  s.registry = BlockRegistry(h.geometry);
  s.ever_blocked.assign(h.geometry.size(), 0);
  return s;
}

InteractionSplit split_interaction(const Vector& energies, const Matrix& interaction,
                                   const BlockRegistry& registry, const ContractedMetricView& view,
                                   const std::vector<std::vector<int>>& group_distance,
                                   double shell_hi, double order_min,
                                   const ResonanceParams& params, double j0) {
  const Eigen::Index n = interaction.rows();
  InteractionSplit split{Matrix::Zero(n, n), Matrix::Zero(n, n), Matrix::Zero(n, n),
                         Matrix::Zero(n, n)};

  // Per-site lookups. The perturbation avoids the resonant cores S_k of the
  // scale's active blocks; collar sites still take part, so a small block
  // never keeps first-order couplings to its surroundings (those live inside
  // the collared block and are removed by its exact diagonalization).
  std::vector<int> small_of(n, -1), large_of(n, -1);
  std::vector<char> in_sk(n, 0);
  for (const auto& b : registry.blocks()) {
    for (int s : b.all_sites()) {
      if (b.is_small)
        small_of[s] = b.id;
      else
        large_of[s] = b.id;
    }
    if (b.role != BlockRole::Released)
      for (int s : b.core_sites) in_sk[s] = 1;
  }

  const double ratio = j0 > 0.0 && params.epsilon > 0.0 ? j0 / params.epsilon : 0.0;
  auto route = [&](Eigen::Index x, Eigen::Index y) -> Matrix* {
    if (small_of[x] >= 0 && small_of[x] == small_of[y]) return &split.sint;
    if (large_of[x] >= 0 && large_of[x] == large_of[y]) return &split.lint;
    if (in_sk[x] || in_sk[y]) return &split.res;
    const int gx = view.group_of(static_cast<int>(x));
    const int gy = view.group_of(static_cast<int>(y));
    const int d = group_distance[gx][gy];
    if (!(static_cast<double>(d) < shell_hi)) return &split.res;
    // Safety re-check of the resonance conditions at the pair's effective
    // order; a pair whose gap has drifted below threshold is deferred, not
    // rotated.
    const double gap = std::abs(energies[x] - energies[y]);
    if (params.epsilon > 0.0) {
      const double order = std::max(static_cast<double>(d), order_min);
      if (gap < std::pow(params.epsilon, order)) return &split.res;
      if (std::abs(interaction(x, y)) > std::pow(ratio, order) * gap) return &split.res;
    } else if (gap == 0.0) {
      return &split.res;
    }
    return &split.per;
  };

  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index y = x + 1; y < n; ++y) {
      const double j = interaction(x, y);
      if (j == 0.0 && interaction(y, x) == 0.0) continue;
      Matrix* target = route(x, y);
      (*target)(x, y) = j;
      (*target)(y, x) = interaction(y, x);
    }
  return split;
}

ScaleState perform_step(ScaleState state, const PipelineContext& ctx) {
  const int k = state.k;
  const double order_min = ctx.schedule.length(k - 1);
  const double shell_hi = ctx.schedule.length(k);
  const auto& geom = ctx.geom;

  // 1) Detection against the registry entering the scale. Every pair within
  // the scale's reach is tested, not only the new shell [L_{k-1}, L_k):
  // diagonalizing a block shifts its eigenvalues, so a pair that was clean
  // when its own shell was treated can turn resonant later. The thresholds
  // use the pair's effective order max(d, L_{k-1}), since couplings
  // surviving into the scale are at least that order in the hopping.
  const ContractedMetricView view = state.registry.contracted_view(geom);
  std::vector<char> excluded(view.num_groups(), 0);
  for (const ResonantBlock* big : state.registry.active_large())
    excluded[view.group_of(big->core_sites.front())] = 1;
  const auto pairs = detect_resonances(state.energies, state.interaction, view, excluded, 1.0,
                                       shell_hi, order_min, ctx.params, ctx.j0);

  // 2) Components, collars, small/large classification.
  const auto components = form_blocks(pairs, state.registry.active_large(), view);
  BlockRegistry registry = classify_and_collar(components, state.registry, k, shell_hi, ctx.params,
                                               shell_hi, geom);

  // 3) Split the interaction and rotate the perturbative part away.
  const ContractedMetricView scale_view = registry.contracted_view(geom);
  const auto gdist = scale_view.all_group_distances();
  const InteractionSplit split =
      split_interaction(state.energies, state.interaction, registry, scale_view, gdist, shell_hi,
                        order_min, ctx.params, ctx.j0);
  const Generator gen = build_generator(state.energies, split.per, k);
  const OrthogonalRotation omega = orthogonal_exp(gen);

  Matrix h = state.interaction;
  h.diagonal() = state.energies;
  h = conjugate(h, omega);
  OrthogonalRotation cumulative = accumulate(state.rotation, omega.matrix);
  double worst_residual = cumulative.orth_residual;

  // 4) Exact diagonalization inside every small collared block that still has
  // internal weight; this also re-diagonalizes released groups whose interior
  // picked up higher-order terms.
  const double act_tol = ctx.schedule.off_diag_tol * ctx.h_scale;
  for (const auto& b : registry.blocks()) {
    if (!b.is_small) continue;
    const auto sites = b.all_sites();
    if (sites.size() < 2) continue;
    double internal = 0.0;
    for (std::size_t i = 0; i < sites.size(); ++i)
      for (std::size_t j = i + 1; j < sites.size(); ++j)
        internal = std::max(internal, std::abs(h(sites[i], sites[j])));
    if (internal < act_tol) continue;
    const BlockRotation rot = jacobi_block_diagonalize(h, sites);
    apply_block_rotation(h, rot);
    apply_block_rotation_right(cumulative.matrix, rot);
    for (int s : sites) state.ever_blocked[s] = 1;
  }
  cumulative = certify(std::move(cumulative.matrix));
  worst_residual = std::max(worst_residual, cumulative.orth_residual);

  // 5) Absorb the diagonal and record the step.
  state.energies = h.diagonal();
  h.diagonal().setZero();
  state.interaction = std::move(h);
  state.rotation = std::move(cumulative);

  StepMetrics m;
  m.step = k;
  m.length = shell_hi;
  m.resonant_pairs = static_cast<int>(pairs.size());
  for (const auto& b : registry.blocks()) {
    if (b.role == BlockRole::Released) continue;
    ++m.blocks_total;
    if (b.is_small)
      ++m.blocks_small;
    else
      ++m.blocks_large;
    m.largest_block = std::max(m.largest_block, b.volume());
  }
  m.max_offdiag = max_abs_offdiag(state.interaction);
  m.generator_max = gen.max_abs();
  m.orth_residual = worst_residual;
  state.metrics.push_back(m);

  registry.release_small_blocks();
  state.registry = std::move(registry);
  state.k = k + 1;
  return state;
}

namespace {

/// Exact diagonalization of every connected cluster of above-tolerance
/// entries; the closing pass of run_to_convergence.
void cleanup_pass(Matrix& h, OrthogonalRotation& rotation, std::vector<char>& ever_blocked,
                  double tol_abs) {
  const Eigen::Index n = h.rows();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index y = x + 1; y < n; ++y)
      if (std::abs(h(x, y)) >= tol_abs) {
        const int a = find(static_cast<int>(x)), b = find(static_cast<int>(y));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  std::vector<std::vector<int>> clusters(n);
  for (int x = 0; x < n; ++x) clusters[find(x)].push_back(x);
  for (auto& cluster : clusters) {
    if (cluster.size() < 2) continue;
    const BlockRotation rot = jacobi_block_diagonalize(h, cluster);
    apply_block_rotation(h, rot);
    apply_block_rotation_right(rotation.matrix, rot);
    for (int s : cluster) ever_blocked[s] = 1;
  }
  rotation = certify(std::move(rotation.matrix));
}

}  // namespace

FinalDiagonalization run_to_convergence(const Hamiltonian& h, const Schedule& sched,
                                        const ResonanceParams& params) {
  const PipelineContext ctx = make_context(h, sched, params);
  const double tol_abs = sched.off_diag_tol * ctx.h_scale;

  ScaleState state = initial_state(h);
  FinalDiagonalization out;
  while (state.k <= sched.max_steps && max_abs_offdiag(state.interaction) >= tol_abs) {
    state = perform_step(std::move(state), ctx);
    out.registry_history.push_back(state.registry);
  }
  out.steps_used = state.k - 1;

  Matrix residual = state.interaction;
  residual.diagonal() = state.energies;
  OrthogonalRotation rotation = state.rotation;
  if (max_abs_offdiag(residual) >= tol_abs) {
    out.cleanup_used = true;
    cleanup_pass(residual, rotation, state.ever_blocked, tol_abs);
    if (max_abs_offdiag(residual) >= tol_abs) {
      // Jacobi on the full residual; unconditional termination.
      std::vector<int> everything(h.geometry.size());
      std::iota(everything.begin(), everything.end(), 0);
      const BlockRotation rot = jacobi_block_diagonalize(residual, everything);
      apply_block_rotation(residual, rot);
      apply_block_rotation_right(rotation.matrix, rot);
      for (int s : everything) state.ever_blocked[s] = 1;
      rotation = certify(std::move(rotation.matrix));
    }
  }

  out.eigenvalues = residual.diagonal();
  out.rotation = std::move(rotation);
  out.ever_blocked = state.ever_blocked;
  out.metrics = std::move(state.metrics);
  out.registry = std::move(state.registry);
  out.labels = assign_labels(out.rotation.matrix, out.ever_blocked);
  return out;
}

std::vector<int> assign_labels(const Matrix& rotation, const std::vector<char>& ever_blocked) {
  const Eigen::Index n = rotation.cols();
  std::vector<int> labels(n, -1);
  std::vector<char> taken(n, 0);
  for (Eigen::Index a = 0; a < n; ++a)
    if (ever_blocked[a]) {
      labels[a] = static_cast<int>(a);
      taken[a] = 1;
    }

  std::vector<int> free_states;
  for (Eigen::Index a = 0; a < n; ++a)
    if (labels[a] < 0) free_states.push_back(static_cast<int>(a));
  std::stable_sort(free_states.begin(), free_states.end(), [&](int a, int b) {
    const double wa = rotation.col(a).cwiseAbs().maxCoeff();
    const double wb = rotation.col(b).cwiseAbs().maxCoeff();
    if (wa != wb) return wa > wb;
    return a < b;
  });
  for (int a : free_states) {
    std::vector<int> sites(n);
    std::iota(sites.begin(), sites.end(), 0);
    std::stable_sort(sites.begin(), sites.end(), [&](int x, int y) {
      const double ax = std::abs(rotation(x, a)), ay = std::abs(rotation(y, a));
      if (ax != ay) return ax > ay;
      return x < y;
    });
    for (int x : sites)
      if (!taken[x]) {
        labels[a] = x;
        taken[x] = 1;
        break;
      }
  }
  for (Eigen::Index a = 0; a < n; ++a)
    if (labels[a] < 0) throw NumericalError("state labeling failed to produce a bijection");
  return labels;
}

}  // namespace mslocal
