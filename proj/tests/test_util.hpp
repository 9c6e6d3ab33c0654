#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "occface/core.hpp"

namespace occface::testing {

inline Eigen::Matrix3Xd random_points(int n, std::mt19937_64& rng, double scale = 10.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::Matrix3Xd p(3, n);
  for (int i = 0; i < n; ++i) p.col(i) << u(rng), u(rng), u(rng);
  return p;
}

inline RigidTransformd random_transform(std::mt19937_64& rng, double max_angle = 3.14159, double max_shift = 5.0) {
  std::uniform_real_distribution<double> a(-max_angle, max_angle);
  std::uniform_real_distribution<double> t(-max_shift, max_shift);
  return RigidTransformd::FromAngles(a(rng), a(rng), a(rng), Eigen::Vector3d(t(rng), t(rng), t(rng)));
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("occface_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace occface::testing
