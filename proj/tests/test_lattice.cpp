#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <random>
#include <set>

#include "mslocal/lattice.hpp"

using namespace mslocal;

namespace {

// Independent shortest-path oracle: BFS over sites where group mates connect
// at zero cost and L1-adjacent sites at cost one.
int bfs_distance_oracle(const LatticeGeometry& geom, const std::vector<int>& label, int from,
                        int to) {
  std::vector<int> dist(geom.size(), -1);
  std::deque<int> q;
  auto push = [&](int s, int d) {
    if (dist[s] >= 0) return;
    dist[s] = d;
    q.push_back(s);
    if (label[s] >= 0)
      for (int t = 0; t < geom.size(); ++t)
        if (label[t] == label[s] && dist[t] < 0) {
          dist[t] = d;
          q.push_back(t);
        }
  };
  push(from, 0);
  while (!q.empty()) {
    const int s = q.front();
    q.pop_front();
    for (int t : geom.neighbors(s)) push(t, dist[s] + 1);
  }
  return dist[to];
}

}  // namespace

TEST_CASE("l1 distance on a 2D box") {
  LatticeGeometry geom({4, 5});
  const int a = geom.flat_index({0, 0});
  const int b = geom.flat_index({2, 3});
  CHECK(geom.l1_distance(a, b) == 5);
  CHECK(geom.l1_distance(b, b) == 0);
}

TEST_CASE("l1 distance on a chain") {
  LatticeGeometry geom({6});
  CHECK(geom.l1_distance(1, 4) == 3);
  CHECK_THROWS_AS(geom.l1_distance(0, 6), std::out_of_range);
  CHECK_THROWS_AS(geom.l1_distance(-1, 0), std::out_of_range);
}

TEST_CASE("coords and flat index invert each other") {
  LatticeGeometry geom({3, 4, 2});
  CHECK(geom.size() == 24);
  for (int s = 0; s < geom.size(); ++s) CHECK(geom.flat_index(geom.coords(s)) == s);
}

TEST_CASE("flat order is lexicographic in coordinates") {
  LatticeGeometry geom({3, 3});
  CHECK(geom.flat_index({0, 0}) < geom.flat_index({0, 1}));
  CHECK(geom.flat_index({0, 2}) < geom.flat_index({1, 0}));
}

TEST_CASE("trivial contraction reproduces the l1 metric") {
  LatticeGeometry geom({4, 3});
  const auto view = ContractedMetricView::trivial(geom);
  for (int a = 0; a < geom.size(); ++a)
    for (int b = 0; b < geom.size(); ++b) CHECK(view.distance(a, b) == geom.l1_distance(a, b));
}

TEST_CASE("contracting a group shortens paths through it") {
  LatticeGeometry geom({6});
  std::vector<int> label(6, -1);
  label[2] = label[3] = 7;
  const ContractedMetricView view(geom, label);
  CHECK(view.distance(2, 3) == 0);
  CHECK(view.distance(0, 5) == 4);  // 0-1-(23)-4-5
  CHECK(view.distance(0, 5) == bfs_distance_oracle(geom, label, 0, 5));
}

TEST_CASE("pairs_in_shell on a 4-site chain") {
  LatticeGeometry geom({4});
  const auto view = ContractedMetricView::trivial(geom);
  const auto near = view.pairs_in_shell(1.0, 2.0);
  CHECK(near == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 3}});
  CHECK(view.pairs_in_shell(1.0, 4.0).size() == 6);
  CHECK(view.pairs_in_shell(3.5, 3.6).empty());
  CHECK_THROWS_AS(view.pairs_in_shell(2.0, 1.0), std::invalid_argument);
}

TEST_CASE("contracted metric properties on random contractions") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 20; ++trial) {
    const bool two_d = trial % 2 == 0;
    LatticeGeometry geom(two_d ? std::vector<int>{5, 4} : std::vector<int>{18});
    std::vector<int> label(geom.size(), -1);
    // A few contiguous random groups.
    std::uniform_int_distribution<int> pick(0, geom.size() - 1);
    for (int g = 0; g < 3; ++g) {
      int seed = pick(rng);
      label[seed] = g;
      for (int t : geom.neighbors(seed))
        if (label[t] < 0 && rng() % 2 == 0) label[t] = g;
    }
    const ContractedMetricView view(geom, label);

    for (int a = 0; a < geom.size(); ++a)
      for (int b = 0; b < geom.size(); ++b) {
        const int dab = view.distance(a, b);
        CHECK(dab == view.distance(b, a));
        CHECK(dab <= geom.l1_distance(a, b));
        CHECK(dab == bfs_distance_oracle(geom, label, a, b));
      }
    // Triangle inequality through a handful of midpoints.
    for (int c = 0; c < geom.size(); c += 3)
      for (int a = 0; a < geom.size(); a += 2)
        for (int b = 0; b < geom.size(); b += 2)
          CHECK(view.distance(a, b) <= view.distance(a, c) + view.distance(c, b));
  }
}

TEST_CASE("pairs_in_shell equals the brute-force filter") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    LatticeGeometry geom({10, 2});
    std::vector<int> label(geom.size(), -1);
    for (int s = 0; s < geom.size(); ++s)
      if (rng() % 4 == 0) label[s] = static_cast<int>(rng() % 3);
    const ContractedMetricView view(geom, label);
    const double lo = 1.0 + static_cast<double>(rng() % 3);
    const double hi = lo + 0.5 + static_cast<double>(rng() % 4);
    std::set<std::pair<int, int>> expected;
    for (int g = 0; g < view.num_groups(); ++g)
      for (int h = g + 1; h < view.num_groups(); ++h) {
        const int d = view.group_distance(g, h);
        if (d >= lo && d < hi) expected.insert({g, h});
      }
    const auto got = view.pairs_in_shell(lo, hi);
    CHECK(std::set<std::pair<int, int>>(got.begin(), got.end()) == expected);
    CHECK(got.size() == expected.size());
  }
}
