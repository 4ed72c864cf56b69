#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "srb/types.hpp"

namespace srb {

/// Axis-aligned box, with per-axis periodicity flags.  Periodic axes live on
/// the unit circle [0,1) and use the wrapped metric; [lo,hi] is ignored for
/// membership on those axes.
struct Box {
  Vec lo;
  Vec hi;
  std::vector<bool> periodic;  // empty means all axes are plain intervals

  int dim() const { return static_cast<int>(lo.size()); }
  bool is_periodic(int axis) const {
    return !periodic.empty() && periodic[static_cast<size_t>(axis)];
  }
  bool contains(const Vec& x, double tol = 0.0) const;
  Vec center() const { return 0.5 * (lo + hi); }
  double diameter() const;
};

/// Fold periodic coordinates into [0,1).
Vec wrap_point(const Vec& x, const Box& box);

/// Representative of a-b with periodic components folded to [-1/2, 1/2).
Vec wrap_diff(const Vec& a, const Vec& b, const Box& box);

/// Metric induced by the box topology (wrapped on periodic axes).
double distance(const Vec& a, const Vec& b, const Box& box);

/// Deterministic RNG stream: every consumer derives its engine from the
/// experiment seed plus a fixed stream id, so results do not depend on the
/// order in which modules draw.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream);

/// Uniform sample in the box (periodic axes sampled in [0,1)).
Vec uniform_in_box(const Box& box, std::mt19937_64& rng);

/// Random unit vector.
Vec random_unit(int dim, std::mt19937_64& rng);

/// Random d x k matrix with orthonormal columns.
Mat random_orthonormal(int dim, int k, std::mt19937_64& rng);

/// Orthonormalize the columns of a full-rank matrix (thin QR, sign-fixed so
/// the result is deterministic).
Mat orthonormalize(const Mat& basis);

/// Principal angles between the column spans of two orthonormal bases,
/// ascending, padded with pi/2 when the dimensions differ.
std::vector<double> principal_angles(const Mat& e, const Mat& f);

/// Bounding box (hull per coordinate) of a point cloud, inflated by pad;
/// periodic axes are marked as covering the whole circle.
Box bounding_box(const std::vector<Vec>& points, const Box& topology, double pad);

}  // namespace srb
