#pragma once

#include <cstdint>

#include "mslocal/lattice.hpp"
#include "mslocal/types.hpp"

namespace mslocal {

enum class DisorderKind { Uniform };

/// iid on-site disorder with a bounded density. Sampling is keyed by
/// (master_seed, sample_index) so parallel workers never share a stream.
struct DisorderConfig {
  DisorderKind kind = DisorderKind::Uniform;
  double lo = 0.0;
  double hi = 1.0;
  std::uint64_t master_seed = 0;

  double density_bound() const { return 1.0 / (hi - lo); }
  void validate() const;
};

/// Deterministic 64-bit mix used to derive per-sample streams.
std::uint64_t mix_seed(std::uint64_t master_seed, std::uint64_t sample_index);

/// Length-size vector of iid draws from the configured density. Identical
/// (master_seed, sample_index) give bit-identical vectors on every platform.
Vector sample_potential(const LatticeGeometry& geom, const DisorderConfig& cfg,
                        std::uint64_t sample_index);

/// Anderson tight-binding Hamiltonian on the finite box: potential on the
/// diagonal, -j0 between L1-adjacent sites, zero elsewhere.
struct Hamiltonian {
  LatticeGeometry geometry;
  Vector potential;
  double j0 = 0.0;
  Matrix matrix;
};

Hamiltonian build_hamiltonian(const LatticeGeometry& geom, const Vector& potential, double j0);

}  // namespace mslocal
