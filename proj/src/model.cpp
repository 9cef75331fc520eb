#include "mslocal/model.hpp"

#include <stdexcept>
#include <string>

namespace mslocal {
namespace {

// splitmix64; the standard finalizer constants.
std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Top 53 bits -> double in [0, 1).
double to_unit_double(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

}  // namespace

void DisorderConfig::validate() const {
  if (!(hi > lo)) throw std::invalid_argument("disorder requires hi > lo");
}

std::uint64_t mix_seed(std::uint64_t master_seed, std::uint64_t sample_index) {
  std::uint64_t state = master_seed;
  (void)splitmix64(state);
  state ^= 0x632be59bd9b4e019ULL ^ sample_index * 0x9e3779b97f4a7c15ULL;
  return splitmix64(state);
}

Vector sample_potential(const LatticeGeometry& geom, const DisorderConfig& cfg,
                        std::uint64_t sample_index) {
  cfg.validate();
  std::uint64_t state = mix_seed(cfg.master_seed, sample_index);
  Vector v(geom.size());
  for (int s = 0; s < geom.size(); ++s)
    v[s] = cfg.lo + (cfg.hi - cfg.lo) * to_unit_double(splitmix64(state));
  return v;
}

Hamiltonian build_hamiltonian(const LatticeGeometry& geom, const Vector& potential, double j0) {
  if (potential.size() != geom.size())
    throw std::invalid_argument("potential length " + std::to_string(potential.size()) +
                                " does not match lattice size " + std::to_string(geom.size()));
  if (j0 < 0.0) throw std::invalid_argument("hopping j0 must be nonnegative");
  Matrix h = Matrix::Zero(geom.size(), geom.size());
  h.diagonal() = potential;
  for (int s = 0; s < geom.size(); ++s)
    for (int t : geom.neighbors(s)) {
      h(s, t) = -j0;
      h(t, s) = -j0;
    }
  return Hamiltonian{geom, potential, j0, std::move(h)};
}

}  // namespace mslocal
