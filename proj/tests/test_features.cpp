#include <doctest.h>

#include <random>

#include "occface/features.hpp"

using namespace occface;

namespace {

DepthGrid bumpy(int h, int w) {
  DepthGrid d(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) d(r, c) = std::sin(0.3 * c) * 4.0 + 0.02 * r * r - 0.1 * c * r;
  }
  return d;
}

}  // namespace

TEST_CASE("a flat map yields upward normals") {
  const auto n = surface_normals(RangeImage(DepthGrid::Constant(2, 2, 7.0)), 1.0);
  const auto f = feature_vector(n, 1);
  REQUIRE(f.size() == 12);
  for (int k = 0; k < 4; ++k) CHECK(f.segment<3>(3 * k) == Eigen::Vector3d(0, 0, 1));
  CHECK(feature_vector(n, 2).size() == 3);
}

TEST_CASE("feature length follows the sampling stride") {
  const auto n = surface_normals(RangeImage(bumpy(10, 7)), 1.0);
  for (int f = 1; f <= 11; ++f) {
    const int rows = (10 + f - 1) / f, cols = (7 + f - 1) / f;
    CHECK(feature_vector(n, f).size() == 3 * rows * cols);
  }
  CHECK_THROWS_AS(feature_vector(n, 0), ValidationError);
}

TEST_CASE("a tilted plane has a constant known normal") {
  DepthGrid d(5, 6);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 6; ++c) d(r, c) = 0.5 * c * 2.0 - 0.25 * r * 2.0;
  }
  const auto n = surface_normals(RangeImage(d), 2.0);
  const Eigen::Vector3d expect = Eigen::Vector3d(-0.5, 0.25, 1.0).normalized();
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 6; ++c) CHECK((n.normal(r, c) - expect).norm() < 1e-12);
  }
}

TEST_CASE("normals ignore a depth offset") {
  const DepthGrid d = bumpy(8, 8);
  const auto a = surface_normals(RangeImage(d), 1.0);
  const auto b = surface_normals(RangeImage((d.array() + 123.0).matrix()), 1.0);
  CHECK((a.nx - b.nx).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a.ny - b.ny).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a.nz - b.nz).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("transposing the grid swaps the x and y components") {
  const DepthGrid d = bumpy(6, 9);
  const auto a = surface_normals(RangeImage(d), 1.0);
  const auto b = surface_normals(RangeImage(DepthGrid(d.transpose())), 1.0);
  CHECK((a.nx - b.ny.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a.ny - b.nx.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("normals are unit length and face the sensor") {
  const auto n = surface_normals(RangeImage(bumpy(9, 11)), 0.7);
  for (int r = 0; r < 9; ++r) {
    for (int c = 0; c < 11; ++c) {
      CHECK(n.normal(r, c).norm() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(n.nz(r, c) > 0.0);
    }
  }
}

TEST_CASE("invalid pixels get the default normal") {
  DepthGrid d = bumpy(3, 3);
  FlagGrid v = FlagGrid::Constant(3, 3, true);
  v(1, 1) = false;
  v(1, 0) = false;
  v(1, 2) = false;
  const auto n = surface_normals(RangeImage(d, v), 1.0);
  CHECK_FALSE(n.valid(1, 1));
  CHECK(n.normal(1, 1) == Eigen::Vector3d(0, 0, 1));
  // Row 0 has no valid vertical neighbour once row 1 is gone.
  CHECK_FALSE(n.valid(0, 0));
  v(1, 0) = true;
  CHECK(surface_normals(RangeImage(d, v), 1.0).valid(0, 0));
}
