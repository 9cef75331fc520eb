#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mslocal/model.hpp"

using namespace mslocal;

TEST_CASE("uniform draws stay in the configured support") {
  LatticeGeometry geom({50});
  DisorderConfig cfg;
  cfg.master_seed = 7;
  const Vector v = sample_potential(geom, cfg, 3);
  for (int i = 0; i < v.size(); ++i) {
    CHECK(v[i] >= 0.0);
    CHECK(v[i] < 1.0);
  }
  CHECK(cfg.density_bound() == 1.0);
}

TEST_CASE("sampling is reproducible and streams are independent") {
  LatticeGeometry geom({32});
  DisorderConfig cfg;
  cfg.master_seed = 42;
  const Vector a = sample_potential(geom, cfg, 5);
  const Vector b = sample_potential(geom, cfg, 5);
  const Vector c = sample_potential(geom, cfg, 6);
  CHECK(a == b);
  CHECK(a != c);
  cfg.master_seed = 43;
  CHECK(sample_potential(geom, cfg, 5) != a);
}

TEST_CASE("empirical mean of many draws sits near one half") {
  LatticeGeometry geom({100000});
  DisorderConfig cfg;
  cfg.master_seed = 2026;
  const Vector v = sample_potential(geom, cfg, 0);
  CHECK(std::abs(v.mean() - 0.5) < 0.01);
}

TEST_CASE("invalid disorder bounds are rejected") {
  DisorderConfig cfg;
  cfg.lo = 1.0;
  cfg.hi = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("single site hamiltonian") {
  LatticeGeometry geom({1});
  Vector v(1);
  v << 0.3;
  const Hamiltonian h = build_hamiltonian(geom, v, 0.5);
  CHECK(h.matrix.rows() == 1);
  CHECK(h.matrix(0, 0) == 0.3);
}

TEST_CASE("two-site chain instantiates the definition") {
  LatticeGeometry geom({2});
  Vector v(2);
  v << 0.0, 1.0;
  const Hamiltonian h = build_hamiltonian(geom, v, 0.01);
  CHECK(h.matrix(0, 0) == 0.0);
  CHECK(h.matrix(1, 1) == 1.0);
  CHECK(h.matrix(0, 1) == -0.01);
  CHECK(h.matrix(1, 0) == -0.01);
}

TEST_CASE("zero hopping gives a diagonal matrix") {
  LatticeGeometry geom({3, 3});
  DisorderConfig cfg;
  const Vector v = sample_potential(geom, cfg, 0);
  const Hamiltonian h = build_hamiltonian(geom, v, 0.0);
  CHECK(Matrix(h.matrix - Matrix(v.asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("matrix symmetry is bit exact and rows follow the neighbor count") {
  LatticeGeometry geom({4, 3});
  DisorderConfig cfg;
  cfg.master_seed = 11;
  const Vector v = sample_potential(geom, cfg, 1);
  const double j0 = 0.07;
  const Hamiltonian h = build_hamiltonian(geom, v, j0);
  for (int x = 0; x < geom.size(); ++x) {
    int nonzero = 0;
    for (int y = 0; y < geom.size(); ++y) {
      CHECK(h.matrix(x, y) == h.matrix(y, x));
      if (x != y && h.matrix(x, y) != 0.0) {
        CHECK(h.matrix(x, y) == -j0);
        CHECK(geom.l1_distance(x, y) == 1);
        ++nonzero;
      }
    }
    CHECK(nonzero == static_cast<int>(geom.neighbors(x).size()));
  }
}

TEST_CASE("length mismatch is rejected") {
  LatticeGeometry geom({4});
  Vector v(3);
  v.setZero();
  CHECK_THROWS_AS(build_hamiltonian(geom, v, 0.1), std::invalid_argument);
}
