#include "srb/graph_transform.hpp"

#include <cmath>
#include <numeric>

namespace srb {

namespace {

int int_pow(int base, int exp) {
  int out = 1;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

double fit_decay_rate(const std::vector<double>& values) {
  // slope of -log(values) against the step index, ignoring flatlined tails
  std::vector<double> xs, ys;
  for (size_t k = 0; k < values.size(); ++k) {
    if (values[k] > 1e-14) {
      xs.push_back(static_cast<double>(k + 1));
      ys.push_back(std::log(values[k]));
    }
  }
  if (xs.size() < 2) return std::numeric_limits<double>::infinity();
  double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double num = 0, den = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  return -num / den;
}

}  // namespace

TensorGrid::TensorGrid(int dims, int per_axis, double radius, int value_size)
    : dims_(dims), per_axis_(per_axis), value_size_(value_size), radius_(radius) {
  values_.assign(static_cast<size_t>(int_pow(per_axis, dims)), Vec::Zero(value_size));
}

Vec TensorGrid::node_coord(int flat) const {
  Vec xi(dims_);
  int rest = flat;
  for (int a = 0; a < dims_; ++a) {
    int idx = rest % per_axis_;
    rest /= per_axis_;
    xi[a] = -radius_ + 2.0 * radius_ * idx / (per_axis_ - 1);
  }
  return xi;
}

Vec TensorGrid::interp(const Vec& xi) const {
  // multilinear with clamping at the boundary
  std::vector<int> base(static_cast<size_t>(dims_));
  std::vector<double> frac(static_cast<size_t>(dims_));
  for (int a = 0; a < dims_; ++a) {
    double t = (xi[a] + radius_) / (2.0 * radius_) * (per_axis_ - 1);
    t = std::clamp(t, 0.0, static_cast<double>(per_axis_ - 1));
    int b = std::min(per_axis_ - 2, static_cast<int>(std::floor(t)));
    base[static_cast<size_t>(a)] = b;
    frac[static_cast<size_t>(a)] = t - b;
  }
  Vec out = Vec::Zero(value_size_);
  const int corners = 1 << dims_;
  for (int c = 0; c < corners; ++c) {
    double weight = 1.0;
    int flat = 0, stride = 1;
    for (int a = 0; a < dims_; ++a) {
      int bit = (c >> a) & 1;
      weight *= bit ? frac[static_cast<size_t>(a)] : 1.0 - frac[static_cast<size_t>(a)];
      flat += (base[static_cast<size_t>(a)] + bit) * stride;
      stride *= per_axis_;
    }
    if (weight != 0.0) out += weight * values_[static_cast<size_t>(flat)];
  }
  return out;
}

double TensorGrid::max_norm() const {
  double m = 0;
  for (const auto& v : values_) m = std::max(m, v.norm());
  return m;
}

Mat GraphPatch::deriv_at(const Vec& xi, int ds, int du) const {
  Vec flat = deriv.interp(xi);
  return Eigen::Map<const Mat>(flat.data(), ds, du);
}

double GraphPatch::lip_estimate(int ds, int du) const {
  double m = 0;
  for (int i = 0; i < deriv.node_count(); ++i) {
    Vec flat = deriv.node_value(i);
    Eigen::Map<const Mat> dv(flat.data(), ds, du);
    Eigen::JacobiSVD<Mat> svd(dv);
    m = std::max(m, svd.singularValues()[0]);
  }
  return m;
}

GraphPatch GraphPatch::flat(int chart, int du, int ds, double radius, int per_axis) {
  GraphPatch p;
  p.chart = chart;
  p.value = TensorGrid(du, per_axis, radius, ds);
  p.deriv = TensorGrid(du, per_axis, radius, ds * du);
  return p;
}

double c0_distance(const GraphPatch& a, const GraphPatch& b) {
  double m = 0;
  for (int i = 0; i < a.value.node_count(); ++i)
    m = std::max(m, (a.value.node_value(i) - b.value.interp(a.value.node_coord(i))).norm());
  return m;
}

double c1_distance(const GraphPatch& a, const GraphPatch& b) {
  double m = c0_distance(a, b);
  for (int i = 0; i < a.deriv.node_count(); ++i)
    m = std::max(m, (a.deriv.node_value(i) - b.deriv.interp(a.deriv.node_coord(i))).norm());
  return m;
}

GraphPatch graph_transform_step(const ChartSequence& charts, int i, const GraphPatch& v,
                                TransformRecord* record, double fixed_point_tol) {
  const int du = charts.unstable_dim();
  const int ds = charts.stable_dim();
  const double r_next = charts.radius(i + 1);
  Mat lu_inv = charts.linear_u(i).inverse();

  GraphPatch out = GraphPatch::flat(v.chart + 1, du, ds, r_next, v.value.per_axis());
  if (record != nullptr)
    record->source = TensorGrid(du, v.value.per_axis(), r_next, du);

  auto lift = [&](const Vec& xi) {
    Vec w(du + ds);
    w.head(du) = xi;
    w.tail(ds) = v.value.interp(xi);
    return w;
  };

  for (int node = 0; node < out.value.node_count(); ++node) {
    const Vec target = out.value.node_coord(node);
    // contraction for the source unstable coordinate
    Vec xi = lu_inv * target;
    bool converged = false;
    for (int it = 0; it < 200; ++it) {
      Vec g_rem = charts.remainder(i, lift(xi));
      Vec next = lu_inv * (target - g_rem.head(du));
      double move = (next - xi).norm();
      xi = next;
      if (move < fixed_point_tol) {
        converged = true;
        break;
      }
      if (xi.norm() > 4.0 * charts.radius(i))
        throw OpError("fixed-point-diverged", "source left the chart box at step " +
                                                  std::to_string(i));
    }
    if (!converged)
      throw OpError("fixed-point-diverged",
                    "no fixed point at transform step " + std::to_string(i));

    Vec w = lift(xi);
    Vec image = charts.apply_map(i, w);
    out.value.set_node_value(node, image.tail(ds));

    // chain rule for the transported derivative
    Mat dv = v.deriv_at(xi, ds, du);
    Mat dg = charts.map_deriv(i, w);
    Mat tangent(du + ds, du);
    tangent.topRows(du) = Mat::Identity(du, du);
    tangent.bottomRows(ds) = dv;
    Mat img_u = dg.topRows(du) * tangent;
    Mat img_s = dg.bottomRows(ds) * tangent;
    Mat dnext = img_s * img_u.inverse();
    out.deriv.set_node_value(node, Eigen::Map<Vec>(dnext.data(), ds * du));

    if (record != nullptr) record->source.set_node_value(node, xi);
  }

  // class membership: |v(0)| <= r/2 and Lip <= 1/10
  Vec at0 = out.value.interp(Vec::Zero(du));
  if (at0.norm() > 0.5 * r_next + 1e-12)
    throw OpError("left-class", "graph value at 0 exceeds half the radius after step " +
                                    std::to_string(i));
  if (out.lip_estimate(ds, du) > 0.1 + 1e-9)
    throw OpError("left-class",
                  "graph slope exceeds 1/10 after step " + std::to_string(i));
  return out;
}

GraphPatch stable_transform_step(const ChartSequence& charts, int i, const GraphPatch& w,
                                 double fixed_point_tol) {
  const int du = charts.unstable_dim();
  const int ds = charts.stable_dim();
  const double r_here = charts.radius(i);
  Mat lu_inv = charts.linear_u(i).inverse();

  GraphPatch out = GraphPatch::flat(i, ds, du, r_here, w.value.per_axis());
  // note: graph over the stable factor; value grid has du components
  for (int node = 0; node < out.value.node_count(); ++node) {
    const Vec eta = out.value.node_coord(node);
    Vec u = Vec::Zero(du);
    bool converged = false;
    for (int it = 0; it < 200; ++it) {
      Vec p(du + ds);
      p.head(du) = u;
      p.tail(ds) = eta;
      Vec g = charts.apply_map(i, p);
      Vec rem = charts.remainder(i, p);
      Vec next = lu_inv * (w.value.interp(g.tail(ds)) - rem.head(du));
      double move = (next - u).norm();
      u = next;
      if (move < fixed_point_tol) {
        converged = true;
        break;
      }
      if (u.norm() > 4.0 * r_here)
        throw OpError("fixed-point-diverged",
                      "stable transform left the box at step " + std::to_string(i));
    }
    if (!converged)
      throw OpError("fixed-point-diverged",
                    "no fixed point in the stable transform at step " + std::to_string(i));
    out.value.set_node_value(node, u);

    // derivative: tangent (W; I), image must satisfy u-part = Dw_{i+1} s-part
    Vec p(du + ds);
    p.head(du) = u;
    p.tail(ds) = eta;
    Vec g = charts.apply_map(i, p);
    Mat dg = charts.map_deriv(i, p);
    Mat dw_next = w.deriv_at(g.tail(ds), du, ds);
    Mat a_uu = dg.topLeftCorner(du, du), a_us = dg.topRightCorner(du, ds);
    Mat a_su = dg.bottomLeftCorner(ds, du), a_ss = dg.bottomRightCorner(ds, ds);
    // solve W = (a_uu)^-1 [dw_next (a_su W + a_ss) - a_us] by iteration
    Mat dv = Mat::Zero(du, ds);
    for (int it = 0; it < 200; ++it) {
      Mat next = a_uu.inverse() * (dw_next * (a_su * dv + a_ss) - a_us);
      double move = (next - dv).norm();
      dv = next;
      if (move < 1e-14) break;
    }
    out.deriv.set_node_value(node, Eigen::Map<Vec>(dv.data(), du * ds));
  }

  Vec at0 = out.value.interp(Vec::Zero(ds));
  if (at0.norm() > 0.5 * r_here + 1e-12)
    throw OpError("left-class", "stable graph value at 0 exceeds half the radius");
  if (out.lip_estimate(du, ds) > 0.1 + 1e-9)
    throw OpError("left-class", "stable graph slope exceeds 1/10");
  return out;
}

Vec UnstableManifold::embed(const Vec& xi) const {
  const int du = charts->unstable_dim();
  Vec w(charts->ambient_dim());
  w.head(du) = xi;
  w.tail(charts->stable_dim()) = patch.value.interp(xi);
  return charts->to_ambient(charts->steps(), w);
}

Mat UnstableManifold::tangent(const Vec& xi) const {
  const int du = charts->unstable_dim();
  const int ds = charts->stable_dim();
  Mat t(charts->ambient_dim(), du);
  t.topRows(du) = Mat::Identity(du, du);
  t.bottomRows(ds) = patch.deriv_at(xi, ds, du);
  return charts->frame(charts->steps()) * t;
}

std::vector<Vec> UnstableManifold::backward_coords(const Vec& xi) const {
  const int du = charts->unstable_dim();
  const int ds = charts->stable_dim();
  std::vector<Vec> coords;
  Vec target = xi;
  for (int level = static_cast<int>(pullbacks.size()) - 1; level >= 0; --level) {
    const GraphPatch& graph = levels.at(static_cast<size_t>(level));
    Mat lu_inv = charts->linear_u(level).inverse();
    Vec src = pullbacks[static_cast<size_t>(level)].source.interp(target);
    for (int it = 0; it < 200; ++it) {
      Vec w(du + ds);
      w.head(du) = src;
      w.tail(ds) = graph.value.interp(src);
      Vec next = lu_inv * (target - charts->remainder(level, w).head(du));
      double move = (next - src).norm();
      src = next;
      if (move < 1e-13) break;
    }
    coords.push_back(src);
    target = src;
  }
  return coords;  // coords[k-1] is the unstable coordinate in chart (steps - k)
}

std::vector<Vec> UnstableManifold::backward_points(const Vec& xi, int upto) const {
  const int du = charts->unstable_dim();
  const int ds = charts->stable_dim();
  std::vector<Vec> coords = backward_coords(xi);
  std::vector<Vec> out;
  for (int k = 1; k <= upto && k <= static_cast<int>(coords.size()); ++k) {
    int chart_idx = charts->steps() - k;
    const Vec& src = coords[static_cast<size_t>(k - 1)];
    Vec w(du + ds);
    w.head(du) = src;
    w.tail(ds) = levels.at(static_cast<size_t>(chart_idx)).value.interp(src);
    out.push_back(charts->to_ambient(chart_idx, w));
  }
  return out;
}

Mat UnstableManifold::backward_tangent(const Vec& level_coord, int k) const {
  const int du = charts->unstable_dim();
  const int ds = charts->stable_dim();
  int chart_idx = charts->steps() - k;
  Mat t(charts->ambient_dim(), du);
  t.topRows(du) = Mat::Identity(du, du);
  t.bottomRows(ds) =
      levels.at(static_cast<size_t>(chart_idx)).deriv_at(level_coord, ds, du);
  return charts->frame(chart_idx) * t;
}

UnstableManifold unstable_manifold(const SystemSpec& sys, const SampledOrbit& at, int depth,
                                   double lambda1, double delta2, std::uint64_t seed) {
  (void)seed;
  const int du = sys.unstable_dim;
  const int warmup = at.history.depth() - depth;
  if (warmup < 20)
    throw OpError("bad-argument", "history must exceed the depth by the frame warm-up");

  // chain: x_{-history} .. x_0 .. forward lookahead
  std::vector<Vec> chain;
  for (int k = at.history.depth(); k >= 1; --k) chain.push_back(at.history.point(k));
  chain.push_back(at.history.anchor);
  auto forward = long_orbit(sys, at.history.anchor, 45, 0xF0 ^ at.history.depth());
  for (size_t j = 1; j < forward.size(); ++j) chain.push_back(forward[j]);

  const int lo = warmup;                 // chart 0 sits at x_{-depth}
  const int hi = at.history.depth();     // last chart at the anchor
  auto charts = build_charts(sys, chain, lo, hi, du, lambda1, 0.0, delta2);

  UnstableManifold result;
  result.charts = charts;
  GraphPatch v = GraphPatch::flat(0, du, sys.dim - du, charts->radius(0));
  result.pullbacks.resize(static_cast<size_t>(charts->steps()));
  result.levels.push_back(v);
  for (int i = 0; i < charts->steps(); ++i) {
    v = graph_transform_step(*charts, i, v, &result.pullbacks[static_cast<size_t>(i)]);
    result.levels.push_back(v);
  }
  result.patch = v;

  // restart five levels later for the convergence certificate
  GraphPatch shallow = GraphPatch::flat(5, du, sys.dim - du, charts->radius(5));
  for (int i = 5; i < charts->steps(); ++i)
    shallow = graph_transform_step(*charts, i, shallow);
  result.c1_certificate = c1_distance(result.patch, shallow);

  Mat d0 = result.patch.deriv_at(Vec::Zero(du), sys.dim - du, du);
  result.tangent_norm_at0 = d0.norm();
  return result;
}

Vec StableManifold::embed(const Vec& eta) const {
  const int du = charts->unstable_dim();
  Vec w(charts->ambient_dim());
  w.head(du) = patch.value.interp(eta);
  w.tail(charts->stable_dim()) = eta;
  return charts->to_ambient(0, w);
}

Mat StableManifold::tangent(const Vec& eta) const {
  const int du = charts->unstable_dim();
  const int ds = charts->stable_dim();
  Mat t(charts->ambient_dim(), ds);
  t.topRows(du) = patch.deriv_at(eta, du, ds);
  t.bottomRows(ds) = Mat::Identity(ds, ds);
  return charts->frame(0) * t;
}

StableManifold stable_manifold(const SystemSpec& sys, const SampledOrbit& at, int depth,
                               double lambda1, double delta2, std::uint64_t seed) {
  (void)seed;
  const int du = sys.unstable_dim;
  const int back = std::min(at.history.depth(), 40);

  std::vector<Vec> chain;
  for (int k = back; k >= 1; --k) chain.push_back(at.history.point(k));
  chain.push_back(at.history.anchor);
  auto forward = long_orbit(sys, at.history.anchor, depth + 45, 0xAB ^ depth);
  for (size_t j = 1; j < forward.size(); ++j) chain.push_back(forward[j]);

  const int lo = back;          // chart 0 at the anchor
  const int hi = back + depth;  // last chart depth steps ahead
  auto charts = build_charts(sys, chain, lo, hi, du, lambda1, 0.0, delta2);

  StableManifold result;
  result.charts = charts;
  GraphPatch w = GraphPatch::flat(charts->steps(), sys.dim - du, du, charts->radius(charts->steps()));
  for (int i = charts->steps() - 1; i >= 0; --i) w = stable_transform_step(*charts, i, w);
  result.patch = w;

  GraphPatch shallow =
      GraphPatch::flat(charts->steps() - 5, sys.dim - du, du, charts->radius(charts->steps() - 5));
  for (int i = charts->steps() - 6; i >= 0; --i)
    shallow = stable_transform_step(*charts, i, shallow);
  result.c1_certificate = c1_distance(result.patch, shallow);
  return result;
}

ContractionDiagnostics convergence_diagnostics(const ChartSequence& charts,
                                               const GraphPatch& a, const GraphPatch& b,
                                               int n, double delta3) {
  ContractionDiagnostics diag;
  GraphPatch va = a, vb = b;
  const int du = charts.unstable_dim();
  const int ds = charts.stable_dim();
  n = std::min(n, charts.steps());
  for (int k = 0; k < n; ++k) {
    va = graph_transform_step(charts, k, va);
    vb = graph_transform_step(charts, k, vb);
    diag.c0_distance.push_back(c0_distance(va, vb));
    diag.c1_distance.push_back(c1_distance(va, vb));

    double rk = charts.radius(0) * std::exp(-delta3 * (k + 1));
    double sup = 0;
    const int probes = 9;
    for (int t = 0; t < probes; ++t) {
      Vec xi = Vec::Constant(du, -rk + 2.0 * rk * t / (probes - 1));
      sup = std::max(sup, va.deriv_at(xi, ds, du).norm());
    }
    diag.inclination_sup.push_back(sup);
  }
  diag.fitted_c0_rate = fit_decay_rate(diag.c0_distance);
  diag.fitted_c1_rate = fit_decay_rate(diag.c1_distance);
  size_t m = diag.inclination_sup.size();
  diag.inclination_decays =
      m >= 6 && diag.inclination_sup[m - 1] < 0.25 * diag.inclination_sup[m / 2] + 1e-12;
  return diag;
}

double finite_determination_check(const SystemSpec& sys, const SampledOrbit& at, int total,
                                  int agree, double lambda1, double delta2) {
  const int du = sys.unstable_dim;
  const int back = std::min(at.history.depth(), 40);
  std::vector<Vec> chain;
  for (int k = back; k >= 1; --k) chain.push_back(at.history.point(k));
  chain.push_back(at.history.anchor);
  auto forward = long_orbit(sys, at.history.anchor, total + 45, 0xCD);
  for (size_t j = 1; j < forward.size(); ++j) chain.push_back(forward[j]);

  auto charts_a = build_charts(sys, chain, back, back + total, du, lambda1, 0.0, delta2);
  auto charts_b = build_charts(sys, chain, back, back + total, du, lambda1, 0.0, delta2);
  charts_b->linearize_tail(agree);

  GraphPatch wa = GraphPatch::flat(charts_a->steps(), sys.dim - du, du,
                                   charts_a->radius(charts_a->steps()));
  for (int i = charts_a->steps() - 1; i >= 0; --i) wa = stable_transform_step(*charts_a, i, wa);
  GraphPatch wb = GraphPatch::flat(charts_b->steps(), sys.dim - du, du,
                                   charts_b->radius(charts_b->steps()));
  for (int i = charts_b->steps() - 1; i >= 0; --i) wb = stable_transform_step(*charts_b, i, wb);
  return c1_distance(wa, wb);
}

}  // namespace srb
