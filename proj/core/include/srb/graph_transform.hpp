#pragma once

#include <memory>
#include <vector>

#include "srb/charts.hpp"

namespace srb {

/// Values on a tensor grid over [-radius, radius]^dims with multilinear
/// interpolation.  Every node stores a vector of `value_size` components.
class TensorGrid {
public:
  TensorGrid() = default;
  TensorGrid(int dims, int per_axis, double radius, int value_size);

  int dims() const { return dims_; }
  int per_axis() const { return per_axis_; }
  double radius() const { return radius_; }
  int node_count() const { return static_cast<int>(values_.size()); }

  Vec node_coord(int flat) const;
  const Vec& node_value(int flat) const { return values_.at(static_cast<size_t>(flat)); }
  void set_node_value(int flat, const Vec& v) { values_.at(static_cast<size_t>(flat)) = v; }

  Vec interp(const Vec& xi) const;
  double max_norm() const;

private:
  int dims_ = 1, per_axis_ = 17, value_size_ = 1;
  double radius_ = 1.0;
  std::vector<Vec> values_;
};

/// Lipschitz graph over the unstable factor of a chart, with its derivative
/// carried on the same grid (the transform recomputes it by the chain rule,
/// not by differencing).
struct GraphPatch {
  int chart = 0;
  TensorGrid value;  // ds components
  TensorGrid deriv;  // ds x du components, column-major

  double radius() const { return value.radius(); }
  Vec value_at(const Vec& xi) const { return value.interp(xi); }
  Mat deriv_at(const Vec& xi, int ds, int du) const;

  /// Largest derivative norm over the grid (Lipschitz estimate).
  double lip_estimate(int ds, int du) const;

  static GraphPatch flat(int chart, int du, int ds, double radius, int per_axis = 17);
};

/// C0 and C1 distances between graphs over the same chart grid.
double c0_distance(const GraphPatch& a, const GraphPatch& b);
double c1_distance(const GraphPatch& a, const GraphPatch& b);

/// Source coordinates of the transform: target node -> unstable coordinate
/// in the source chart.  Retained so points on transformed graphs can be
/// traced back through every level.
struct TransformRecord {
  TensorGrid source;
};

/// One graph-transform step: the image of graph(v) under the connecting map,
/// restricted to the next chart box.  Grid values solve the contraction for
/// the source point to residual fixed_point_tol.
GraphPatch graph_transform_step(const ChartSequence& charts, int i, const GraphPatch& v,
                                TransformRecord* record = nullptr,
                                double fixed_point_tol = 1e-12);

/// Backward transform for stable graphs: from a graph over the stable factor
/// of chart i+1 to one over chart i.
GraphPatch stable_transform_step(const ChartSequence& charts, int i, const GraphPatch& w,
                                 double fixed_point_tol = 1e-12);

/// Local unstable manifold at the anchor of a backward orbit, as the limit
/// of transforms of the flat graph started at depth n.
struct UnstableManifold {
  std::shared_ptr<ChartSequence> charts;   // along x_{-n} .. x_0
  GraphPatch patch;                        // over the last chart
  std::vector<GraphPatch> levels;          // transform iterates, level 0 .. steps
  std::vector<TransformRecord> pullbacks;  // per transform level
  double c1_certificate = 0;               // distance to the depth-(n-5) patch
  double tangent_norm_at0 = 0;

  Vec embed(const Vec& xi) const;
  Mat tangent(const Vec& xi) const;  // ambient tangent frame, du columns
  /// Chart coordinates of the backward images of the patch point, re-solving
  /// the transform contraction at every level (the stored source grids only
  /// seed the iterations).
  std::vector<Vec> backward_coords(const Vec& xi) const;
  /// Ambient preimages x_{-1}(xi), ..., x_{-upto}(xi) of the patch point.
  std::vector<Vec> backward_points(const Vec& xi, int upto) const;
  /// Ambient tangent of the level-k preimage (k = 0 is the patch itself).
  Mat backward_tangent(const Vec& level_coord, int k) const;
};

UnstableManifold unstable_manifold(const SystemSpec& sys, const SampledOrbit& at, int depth,
                                   double lambda1, double delta2, std::uint64_t seed = 3);

/// Local stable manifold at the anchor, from the backward transform seeded
/// with the flat graph at the end of a forward orbit.
struct StableManifold {
  std::shared_ptr<ChartSequence> charts;  // along x_0 .. x_m
  GraphPatch patch;                       // over chart 0, graph over the stable factor
  double c1_certificate = 0;

  Vec embed(const Vec& eta) const;
  Mat tangent(const Vec& eta) const;
};

StableManifold stable_manifold(const SystemSpec& sys, const SampledOrbit& at, int depth,
                               double lambda1, double delta2, std::uint64_t seed = 3);

struct ContractionDiagnostics {
  std::vector<double> c0_distance, c1_distance;  // per step k = 1..n
  double fitted_c0_rate = 0, fitted_c1_rate = 0;
  std::vector<double> inclination_sup;  // sup |Dv| on shrinking balls, per step
  bool inclination_decays = false;
};

/// Contraction rates of the transform on a pair of graphs, with the
/// shrinking-ball tangency diagnostic.
ContractionDiagnostics convergence_diagnostics(const ChartSequence& charts,
                                               const GraphPatch& a, const GraphPatch& b,
                                               int n, double delta3);

/// C1 distance of the stable graphs of two chart sequences that agree on
/// steps 0..N (the tail of the second is linearized).
double finite_determination_check(const SystemSpec& sys, const SampledOrbit& at, int total,
                                  int agree, double lambda1, double delta2);

}  // namespace srb
