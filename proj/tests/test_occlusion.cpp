#include <doctest.h>

#include <random>

#include "occface/occlusion.hpp"

using namespace occface;

namespace {

DifferenceMap full_map(const DepthGrid& values) {
  return DifferenceMap(values, FlagGrid::Constant(values.rows(), values.cols(), true));
}

ThresholdConfig literal(double tol) {
  ThresholdConfig cfg;
  cfg.tolerance_fraction = tol;
  cfg.column_floor_fraction = 0.0;
  return cfg;
}

DepthGrid random_grid(int h, int w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 10);
  DepthGrid d(h, w);
  for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = u(rng);
  return d;
}

}  // namespace

TEST_CASE("difference map is the absolute depth gap") {
  DepthGrid a(1, 2), b(1, 2);
  a << 3, 10;
  b << 10, 4;
  const auto d = difference_map(RangeImage(a), RangeImage(b));
  CHECK(d.value(0, 0) == 7.0);
  CHECK(d.value(0, 1) == 6.0);
  const auto swapped = difference_map(RangeImage(b), RangeImage(a));
  CHECK(swapped.values() == d.values());

  FlagGrid v(1, 2);
  v << true, false;
  const auto partial = difference_map(RangeImage(a, v), RangeImage(b));
  CHECK(partial.valid_count() == 1);
  CHECK(partial.value(0, 1) == 0.0);
  CHECK_THROWS_AS(difference_map(RangeImage(a), RangeImage(DepthGrid::Zero(2, 2))), ValidationError);
}

TEST_CASE("an all-zero difference map marks nothing") {
  const auto diff = full_map(DepthGrid::Zero(4, 5));
  CHECK(find_threshold_mask(diff, literal(1.0)).occluded_count() == 0);
  ThresholdConfig global;
  global.mode = ThresholdMode::kGlobalQuantile;
  CHECK(find_threshold_mask(diff, global).occluded_count() == 0);
}

TEST_CASE("per-column tolerance") {
  DepthGrid col(3, 1);
  col << 0, 0, 10;
  const auto mask = find_threshold_mask(full_map(col), literal(0.9));
  CHECK(mask.occluded_count() == 1);
  CHECK(mask.occluded(2, 0));

  DepthGrid two(2, 1);
  two << 9, 10;
  CHECK(find_threshold_mask(full_map(two), literal(0.9)).occluded_count() == 2);
  CHECK(find_threshold_mask(full_map(two), literal(1.0)).occluded_count() == 1);
}

TEST_CASE("tolerance one marks exactly the column maxima") {
  std::mt19937_64 rng(21);
  const auto diff = full_map(random_grid(12, 9, rng));
  const auto mask = find_threshold_mask(diff, literal(1.0));
  for (int c = 0; c < 9; ++c) {
    Eigen::Index arg = 0;
    diff.values().col(c).maxCoeff(&arg);
    for (int r = 0; r < 12; ++r) CHECK(mask.occluded(r, c) == (r == arg));
  }
}

TEST_CASE("column floor skips weak columns") {
  DepthGrid d(2, 3);
  d << 1, 10, 4,
       0, 0, 6;
  ThresholdConfig cfg = literal(1.0);
  cfg.column_floor_fraction = 0.5;
  const auto profile = threshold_profile(full_map(d), cfg);
  CHECK(profile.column_floor == 5.0);
  const auto mask = find_threshold_mask(full_map(d), cfg);
  CHECK_FALSE(mask.occluded(0, 0));
  CHECK(mask.occluded(0, 1));
  CHECK(mask.occluded(1, 2));
  CHECK(mask.occluded_count() == 2);
}

TEST_CASE("lower tolerance never marks fewer pixels") {
  std::mt19937_64 rng(22);
  const auto diff = full_map(random_grid(10, 10, rng));
  Eigen::Index previous = 0;
  for (double tol : {1.0, 0.95, 0.8, 0.6, 0.3, 0.1}) {
    const auto mask = find_threshold_mask(diff, literal(tol));
    CHECK(mask.occluded_count() >= previous);
    previous = mask.occluded_count();
  }
}

TEST_CASE("a common depth shift of both images changes nothing") {
  std::mt19937_64 rng(23);
  const DepthGrid a = random_grid(8, 8, rng), b = random_grid(8, 8, rng);
  const auto base = find_threshold_mask(difference_map(RangeImage(a), RangeImage(b)), ThresholdConfig{});
  const DepthGrid a2 = (a.array() + 37.5).matrix(), b2 = (b.array() + 37.5).matrix();
  const auto shifted = find_threshold_mask(difference_map(RangeImage(a2), RangeImage(b2)), ThresholdConfig{});
  CHECK(mask_iou(base, shifted) == 1.0);
}

TEST_CASE("global quantile mode") {
  DepthGrid d(1, 10);
  d << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
  CHECK(valid_quantile(full_map(d), 0.9) == 9.0);
  CHECK(valid_quantile(full_map(d), 1.0) == 10.0);
  ThresholdConfig cfg;
  cfg.mode = ThresholdMode::kGlobalQuantile;
  cfg.quantile = 0.8;
  CHECK(find_threshold_mask(full_map(d), cfg).occluded_count() == 3);
}

TEST_CASE("threshold errors") {
  CHECK_THROWS_AS(find_threshold_mask(DifferenceMap(DepthGrid::Zero(2, 2), FlagGrid::Constant(2, 2, false)),
                                      ThresholdConfig{}),
                  EmptyInputError);
  ThresholdConfig cfg;
  cfg.tolerance_fraction = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.column_floor_fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  DepthGrid neg(1, 1);
  neg << -1.0;
  CHECK_THROWS_AS(full_map(neg), ValidationError);
}

TEST_CASE("edges of an empty mask form the border ring") {
  const auto edges = find_edges(OcclusionMask(5, 4), full_map(DepthGrid::Zero(4, 5)));
  CHECK(edges.component_count == 1);
  CHECK(edges.indices.size() == 2 * 5 + 2 * 2);
  CHECK(edges.boundary(0, 0) == 1);
  CHECK(edges.boundary(1, 1) == 0);
  CHECK(std::is_sorted(edges.indices.begin(), edges.indices.end()));
}

TEST_CASE("edges around a centred square") {
  BitGrid bits = BitGrid::Zero(7, 7);
  bits.block(2, 2, 3, 3).setOnes();
  DepthGrid values = DepthGrid::Zero(7, 7);
  values(1, 3) = 2.5;
  const auto edges = find_edges(OcclusionMask(bits), full_map(values));
  CHECK(edges.component_count == 1);
  // Outer ring 24 plus 12 pixels touching the square; the square's diagonal
  // neighbours are not 4-adjacent.
  CHECK(edges.indices.size() == 24 + 12);
  CHECK(edges.boundary(1, 3) == 1);
  CHECK(edges.boundary(1, 1) == 0);
  CHECK(edges.labels(3, 3) == -1);
  const auto pos = std::find(edges.indices.begin(), edges.indices.end(), 1 * 7 + 3) - edges.indices.begin();
  CHECK(edges.values[static_cast<std::size_t>(pos)] == 2.5);
}

TEST_CASE("components are labelled in scan order") {
  BitGrid bits = BitGrid::Zero(3, 5);
  bits.col(2).setOnes();
  const auto edges = find_edges(OcclusionMask(bits), full_map(DepthGrid::Zero(3, 5)));
  CHECK(edges.component_count == 2);
  CHECK(edges.labels(0, 0) == 0);
  CHECK(edges.labels(0, 4) == 1);
  CHECK(edges.component_boundaries[0].size() + edges.component_boundaries[1].size() == edges.indices.size());

  const BitGrid all = BitGrid::Ones(3, 3);
  const auto none = find_edges(OcclusionMask(all), full_map(DepthGrid::Zero(3, 3)));
  CHECK(none.component_count == 0);
  CHECK(none.indices.empty());
}

TEST_CASE("apply_mask invalidates exactly the occluded pixels") {
  DepthGrid d = DepthGrid::Constant(4, 4, 1.0);
  FlagGrid v = FlagGrid::Constant(4, 4, true);
  v(0, 0) = false;
  BitGrid bits = BitGrid::Zero(4, 4);
  bits(0, 0) = 1;
  bits(1, 1) = 1;
  bits(2, 3) = 1;
  const auto out = apply_mask(RangeImage(d, v), OcclusionMask(bits));
  CHECK(out.valid_count() == 16 - 3);
  CHECK_FALSE(out.valid(1, 1));
  CHECK(out.depth(1, 1) == 0.0);
  CHECK(out.depth(3, 3) == 1.0);
  CHECK_THROWS_AS(apply_mask(RangeImage(d), OcclusionMask(3, 3)), ValidationError);
}
