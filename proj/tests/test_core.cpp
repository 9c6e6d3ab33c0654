#include <doctest.h>

#include <numbers>

#include "occface/core.hpp"
#include "test_util.hpp"

using namespace occface;
using occface::testing::random_points;
using occface::testing::random_transform;

TEST_CASE("identity transform leaves a cloud unchanged") {
  std::mt19937_64 rng(1);
  const PointCloudd cloud(random_points(20, rng));
  CHECK(apply_transform(cloud, RigidTransformd::Identity()).points() == cloud.points());
}

TEST_CASE("quarter turn about z maps x onto y") {
  PointCloudd cloud(Eigen::Matrix3Xd(Eigen::Vector3d(1, 0, 0)));
  const auto out = apply_transform(cloud, RigidTransformd::FromAngles(0, 0, std::numbers::pi / 2));
  CHECK((out.point(0) - Eigen::Vector3d(0, 1, 0)).norm() < 1e-12);
}

TEST_CASE("transform then inverse restores random points") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const PointCloudd cloud(random_points(50, rng));
    const auto t = random_transform(rng);
    const auto back = apply_transform(apply_transform(cloud, t), t.inverse());
    CHECK((back.points() - cloud.points()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(((t * t.inverse()).matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("rigid transforms preserve pairwise distances") {
  std::mt19937_64 rng(3);
  const PointCloudd cloud(random_points(30, rng));
  const auto moved = apply_transform(cloud, random_transform(rng));
  for (int i = 0; i < 30; ++i) {
    for (int j = i + 1; j < 30; ++j) {
      const double before = (cloud.point(i) - cloud.point(j)).norm();
      const double after = (moved.point(i) - moved.point(j)).norm();
      CHECK(std::abs(before - after) < 1e-9);
    }
  }
}

TEST_CASE("angles follow the Rx Ry Rz order and round trip") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> a(-1.4, 1.4);
  for (int trial = 0; trial < 50; ++trial) {
    const double ax = a(rng), ay = a(rng), az = a(rng);
    const auto t = RigidTransformd::FromAngles(ax, ay, az);
    const Eigen::Matrix3d expect = (Eigen::AngleAxisd(ax, Eigen::Vector3d::UnitX()) *
                                    Eigen::AngleAxisd(ay, Eigen::Vector3d::UnitY()) *
                                    Eigen::AngleAxisd(az, Eigen::Vector3d::UnitZ()))
                                       .toRotationMatrix();
    CHECK((t.rotation() - expect).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((t.angles() - Eigen::Vector3d(ax, ay, az)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("composition applies the right operand first") {
  std::mt19937_64 rng(5);
  const auto a = random_transform(rng);
  const auto b = random_transform(rng);
  const Eigen::Vector3d p(1, 2, 3);
  CHECK(((a * b)(p) - a(b(p))).norm() < 1e-12);
}

TEST_CASE("non-rotation matrices are rejected") {
  Eigen::Matrix3d mirror = Eigen::Matrix3d::Identity();
  mirror(0, 0) = -1;
  CHECK_THROWS_AS(RigidTransformd(mirror, Eigen::Vector3d::Zero()), ValidationError);
  CHECK_THROWS_AS(RigidTransformd(2.0 * Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero()), ValidationError);
  CHECK_NOTHROW(RigidTransformd(Eigen::Matrix3d::Identity(), Eigen::Vector3d(1, 2, 3)));
}

TEST_CASE("single precision transforms work too") {
  const auto t = RigidTransform<float>::FromAngles(0.1f, 0.2f, 0.3f, Eigen::Vector3f(1, 2, 3));
  const auto d = t.cast<double>();
  CHECK((d.translation() - Eigen::Vector3d(1, 2, 3)).norm() < 1e-6);
}

TEST_CASE("apply_transform names the first non-finite point") {
  Eigen::Matrix3Xd p = Eigen::Matrix3Xd::Zero(3, 4);
  p(1, 2) = std::numeric_limits<double>::quiet_NaN();
  try {
    apply_transform(PointCloudd(p), RigidTransformd::Identity());
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("point 2") != std::string::npos);
  }
  CHECK_THROWS_AS(apply_transform(PointCloudd(), RigidTransformd::Identity()), EmptyInputError);
}

TEST_CASE("range image to cloud") {
  DepthGrid one(1, 1);
  one << 5.0;
  const auto single = range_image_to_cloud(RangeImage(one), 1.0);
  REQUIRE(single.size() == 1);
  CHECK(single.point(0) == Eigen::Vector3d(0, 0, 5));

  DepthGrid d(2, 2);
  d << 1, 2, 3, 4;
  FlagGrid v(2, 2);
  v << true, true, false, true;
  const auto three = range_image_to_cloud(RangeImage(d, v), 0.5);
  REQUIRE(three.size() == 3);
  CHECK(three.point(2) == Eigen::Vector3d(0.5, 0.5, 4));

  CHECK_THROWS_AS(range_image_to_cloud(RangeImage(3, 3), 1.0), EmptyInputError);
  CHECK_THROWS_AS(range_image_to_cloud(RangeImage(one), 0.0), ValidationError);
}

TEST_CASE("cloud to range image") {
  const auto empty = cloud_to_range_image(PointCloudd(), 4, 3, 1.0);
  CHECK(empty.image.valid_count() == 0);
  CHECK(empty.image.width() == 4);
  CHECK(empty.image.height() == 3);

  const auto one = cloud_to_range_image(PointCloudd(Eigen::Matrix3Xd(Eigen::Vector3d(0, 0, 3))), 3, 3, 1.0);
  CHECK(one.image.valid_count() == 1);
  CHECK(one.image.valid(0, 0));
  CHECK(one.image.depth(0, 0) == 3.0);

  Eigen::Matrix3Xd two(3, 3);
  two << 1.1, 0.9, 50, 1.0, 1.2, 0, 2, 7, 1;
  const auto merged = cloud_to_range_image(PointCloudd(two), 3, 3, 1.0);
  CHECK(merged.image.depth(1, 1) == 7.0);
  CHECK(merged.image.valid_count() == 1);
  CHECK(merged.dropped == 1);
}

TEST_CASE("grid to cloud to grid is exact on full grids") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-100, 100);
  for (double spacing : {1.0, 0.37, 2.5}) {
    DepthGrid d(7, 9);
    for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = u(rng);
    const RangeImage img(d);
    const auto back = cloud_to_range_image(range_image_to_cloud(img, spacing), 9, 7, spacing);
    CHECK(back.image.fully_valid());
    CHECK(back.image.depths() == d);
  }
}

TEST_CASE("upsampled cloud interpolates and respects validity") {
  DepthGrid d(2, 3);
  d << 0, 2, 4, 2, 4, 6;
  const auto dense = upsampled_cloud(RangeImage(d), 1.0, 2);
  CHECK(dense.size() == 3 * 5);
  for (Eigen::Index i = 0; i < dense.size(); ++i) {
    const auto p = dense.point(i);
    CHECK(p.z() == doctest::Approx(2 * p.x() + 2 * p.y()));
  }
  CHECK(upsampled_cloud(RangeImage(d), 1.0, 1).size() == 6);

  FlagGrid v = FlagGrid::Constant(2, 3, true);
  v(0, 0) = false;
  const auto partial = upsampled_cloud(RangeImage(d, v), 1.0, 2);
  for (Eigen::Index i = 0; i < partial.size(); ++i) CHECK(partial.point(i).x() >= 1.0);
}

TEST_CASE("range image construction rules") {
  DepthGrid d(1, 2);
  d << 1.0, std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(RangeImage{d}, ValidationError);
  FlagGrid v(1, 2);
  v << true, false;
  const RangeImage ok(d, v);
  CHECK(ok.depth(0, 1) == 0.0);
  CHECK(ok.valid_count() == 1);
  CHECK_THROWS_AS(RangeImage(0, 3), ValidationError);
  CHECK_THROWS_AS(RangeImage(d, FlagGrid::Constant(2, 2, true)), ValidationError);
  const auto flat = ok.flattened();
  CHECK(RangeImage::FromFlat(flat, 2, 1).depths() == ok.depths());
}

TEST_CASE("mask IoU") {
  BitGrid a = BitGrid::Zero(2, 2), b = BitGrid::Zero(2, 2);
  CHECK(mask_iou(OcclusionMask(a), OcclusionMask(b)) == 1.0);
  a(0, 0) = 1;
  a(0, 1) = 1;
  b(0, 1) = 1;
  b(1, 1) = 1;
  CHECK(mask_iou(OcclusionMask(a), OcclusionMask(b)) == doctest::Approx(1.0 / 3.0));
  CHECK(OcclusionMask(a).occluded_count() == 2);
  CHECK_THROWS_AS(mask_iou(OcclusionMask(a), OcclusionMask(3, 3)), ValidationError);
}
