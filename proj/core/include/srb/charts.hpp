#pragma once

#include <memory>
#include <vector>

#include "srb/splitting.hpp"
#include "srb/system.hpp"

namespace srb {

/// Splitting bases along a stretch of an ambient orbit chain.  The unstable
/// basis at index i is obtained by pushing a frame forward from the start of
/// the chain; the stable one by pulling the expanding coframe back from
/// `lookahead` steps ahead.
struct OrbitFrames {
  int lo = 0;                 // chain index of the first frame
  std::vector<Mat> eu, es;    // frames for chain indices [lo, lo+size)
};
OrbitFrames splittings_along(const SystemSpec& sys, const std::vector<Vec>& chain, int lo,
                             int hi, int du, int lookahead = 40, std::uint64_t seed = 5);

/// Charts along an orbit: per-step splitting-adapted frames, radii, and the
/// decomposition of the connecting maps into a block-diagonal linear part
/// plus a small remainder whose size and Lipschitz constants are verified.
class ChartSequence {
public:
  ChartSequence(const SystemSpec& sys, std::vector<Vec> points, std::vector<Mat> frames,
                int du);

  int steps() const { return static_cast<int>(points_.size()) - 1; }
  int ambient_dim() const { return sys_->dim; }
  int unstable_dim() const { return du_; }
  int stable_dim() const { return sys_->dim - du_; }
  const Vec& base(int i) const { return points_.at(static_cast<size_t>(i)); }
  double radius(int i) const { return radii_.at(static_cast<size_t>(i)); }

  Vec to_chart(int i, const Vec& ambient) const;
  Vec to_ambient(int i, const Vec& w) const;
  /// Ambient image of a chart tangent matrix (columns).
  Mat frame(int i) const { return frames_.at(static_cast<size_t>(i)); }

  /// Connecting map g_i from chart i into chart i+1 and its derivative.
  Vec apply_map(int i, const Vec& w) const;
  Mat map_deriv(int i, const Vec& w) const;

  /// Blocks of the linear part (the block-diagonal of Dg_i(0)).
  const Mat& linear_u(int i) const { return lin_u_.at(static_cast<size_t>(i)); }
  const Mat& linear_s(int i) const { return lin_s_.at(static_cast<size_t>(i)); }
  /// Remainder G_i(w) = g_i(w) - blockdiag(linear_u, linear_s) w.
  Vec remainder(int i, const Vec& w) const;
  Mat remainder_deriv(int i, const Vec& w) const;

  double rate() const { return lambda1_; }
  double radius_drift() const { return delta1_; }
  double remainder_bound() const { return delta2_; }
  double remainder_lip() const { return lip_dg_; }
  double map_deriv_bound() const { return dg_bound_; }

  /// Verify the block rates, remainder size, remainder Lipschitz constant and
  /// derivative bound at the given parameters, choosing maximal radii.
  /// Throws OpError("conditions-violated", ...) naming the condition and step.
  void calibrate(double lambda1, double delta1, double delta2, int probe_count = 12,
                 std::uint64_t seed = 9);

  /// Replace the connecting maps beyond index `from` by their linear parts.
  /// Used to compare graphs driven by sequences with identical heads.
  void linearize_tail(int from);

private:
  const SystemSpec* sys_;
  std::vector<Vec> points_;
  std::vector<Mat> frames_, frames_inv_;
  std::vector<Mat> lin_u_, lin_s_;
  std::vector<double> radii_;
  std::vector<bool> linearized_;
  int du_ = 1;
  double lambda1_ = 0, delta1_ = 0, delta2_ = 0, lip_dg_ = 0, dg_bound_ = 0;
};

/// Charts over an orbit with the splitting computed from the chain itself.
/// The chain must extend deep enough below `lo` (frame warm-up) and above
/// `hi` (stable lookahead); charts are built for chain indices [lo, hi].
std::shared_ptr<ChartSequence> build_charts(const SystemSpec& sys,
                                            const std::vector<Vec>& chain, int lo, int hi,
                                            int du, double lambda1, double delta1,
                                            double delta2);

}  // namespace srb
