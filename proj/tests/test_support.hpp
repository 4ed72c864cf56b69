#pragma once

#include <cmath>

#include "srb/system.hpp"

namespace srb::testing {

/// Central finite-difference derivative of the map, wrap-aware so it stays
/// valid across periodic seams.  Independent oracle for deriv_eval.
inline Mat fd_jacobian(const SystemSpec& sys, const Vec& x, double h = 1e-6) {
  Mat j(sys.dim, sys.dim);
  for (int c = 0; c < sys.dim; ++c) {
    Vec hp = x, hm = x;
    hp[c] += h;
    hm[c] -= h;
    Vec diff = sys.diff(sys.map_eval(sys.wrap(hp)), sys.map_eval(sys.wrap(hm)));
    j.col(c) = diff / (2.0 * h);
  }
  return j;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

/// Exact solenoid-leaf oracle: the unstable leaf through an anchor with
/// known backward angular history is the graph theta -> Z(theta) of the
/// fiber series that follows the anchor's preimage branches.  Valid for
/// both the plain and warped angle maps.
class SolenoidLeafOracle {
public:
  SolenoidLeafOracle(const SystemSpec& sys, const BackwardOrbit& history, int depth = 24)
      : lambda_c_(sys.metadata.at("lambda_c")), warp_(sys.metadata.at("warp")) {
    for (int k = 1; k <= std::min(depth, history.depth()); ++k)
      branch_angles_.push_back(history.preimage(k)[0]);
  }

  // backward angles of the leaf point over angle `theta` (k = 1, 2, ...)
  std::vector<double> backward_angles(double theta, int upto) const {
    std::vector<double> out;
    double t = theta;
    for (int k = 0; k < upto; ++k) {
      t = angle_preimage_near(t, branch_angles_.at(static_cast<size_t>(k)));
      out.push_back(t);
    }
    return out;
  }

  // fiber coordinate of the leaf over `theta`
  Eigen::Vector2d fiber(double theta) const {
    auto angles = backward_angles(theta, static_cast<int>(branch_angles_.size()));
    Eigen::Vector2d z = Eigen::Vector2d::Zero();
    for (int k = static_cast<int>(angles.size()) - 1; k >= 0; --k) {
      double t = angles[static_cast<size_t>(k)];
      Eigen::Vector2d offset(0.5 * std::cos(2 * M_PI * t), 0.5 * std::sin(2 * M_PI * t));
      z = lambda_c_ * z + offset;
    }
    return z;
  }

  Vec point(double theta) const {
    Vec p(3);
    auto z = fiber(theta);
    p << theta - std::floor(theta), z[0], z[1];
    return p;
  }

private:
  double angle_eval(double t) const { return 2 * t + warp_ / (2 * M_PI) * std::sin(2 * M_PI * t); }
  double angle_deriv(double t) const { return 2 + warp_ * std::cos(2 * M_PI * t); }
  // preimage of `target` on the branch containing `near` (same lift window)
  double angle_preimage_near(double target, double near) const {
    double t = near;
    double want = angle_eval(near);
    want = target + std::round(want - target);  // lift target next to g(near)
    for (int it = 0; it < 60; ++it) {
      double r = angle_eval(t) - want;
      if (std::abs(r) < 1e-15) break;
      t -= r / angle_deriv(t);
    }
    return t - std::floor(t);
  }

  double lambda_c_, warp_;
  std::vector<double> branch_angles_;
};

}  // namespace srb::testing
