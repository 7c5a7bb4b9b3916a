#pragma once

#include <memory>
#include <random>

#include <Eigen/Core>

#include "hfl/rbd/model.hpp"

namespace hfl::test {

inline std::shared_ptr<const RobotModel> bolt() {
  static const auto model =
      std::make_shared<const RobotModel>(load_model(HFL_DATA_DIR "/bolt_lite.json"));
  return model;
}

inline Eigen::VectorXd uniform(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = d(rng);
  return out;
}

inline JointState random_state(std::mt19937_64& rng, int n, double q_range = 3.0,
                               double v_range = 5.0) {
  return {uniform(rng, n, -q_range, q_range), uniform(rng, n, -v_range, v_range)};
}

}  // namespace hfl::test
