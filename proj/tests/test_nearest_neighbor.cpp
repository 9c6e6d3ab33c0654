#include <doctest.h>

#include <random>

#include "occface/nearest_neighbor.hpp"
#include "test_util.hpp"

using namespace occface;

TEST_CASE("k-d tree matches a linear scan on random points") {
  std::mt19937_64 rng(11);
  for (int leaf : {1, 4, 16}) {
    const Eigen::Matrix3Xd pts = occface::testing::random_points(500, rng);
    const KdTree3 tree(pts, leaf);
    const Eigen::Matrix3Xd queries = occface::testing::random_points(200, rng, 12.0);
    for (Eigen::Index q = 0; q < queries.cols(); ++q) {
      const auto a = tree.nearest(queries.col(q));
      const auto b = brute_force_nearest(pts, queries.col(q));
      CHECK(a.index == b.index);
      CHECK(a.squared_distance == b.squared_distance);
    }
  }
}

TEST_CASE("ties on a lattice go to the lowest index") {
  Eigen::Matrix3Xd pts(3, 400);
  int k = 0;
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 20; ++x) pts.col(k++) << x, y, 0;
  }
  const KdTree3 tree(pts);
  for (int y = 0; y < 19; ++y) {
    for (int x = 0; x < 19; ++x) {
      // Cell centres are equidistant to four lattice points.
      const Eigen::Vector3d q(x + 0.5, y + 0.5, 1.0);
      const auto hit = tree.nearest(q);
      CHECK(hit.index == y * 20 + x);
      CHECK(hit.index == brute_force_nearest(pts, q).index);
    }
  }
}

TEST_CASE("duplicate points resolve to the first copy") {
  Eigen::Matrix3Xd pts = Eigen::Matrix3Xd::Zero(3, 50);
  const KdTree3 tree(pts, 2);
  CHECK(tree.nearest(Eigen::Vector3d(1, 1, 1)).index == 0);
  CHECK(tree.size() == 50);
}
