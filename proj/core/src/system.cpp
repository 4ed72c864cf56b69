#include "srb/system.hpp"

#include <algorithm>
#include <cmath>

namespace srb {

OrbitSegment iterate(const SystemSpec& sys, const Vec& x, int n, bool with_derivatives) {
  if (n < 0) throw OpError("bad-argument", "negative step count");
  if (!sys.basin.contains(x, 1e-12))
    throw OpError("orbit-escapes-basin", "initial point outside basin of " + sys.name);
  OrbitSegment seg;
  seg.points.reserve(static_cast<size_t>(n) + 1);
  seg.points.push_back(sys.wrap(x));
  for (int k = 0; k < n; ++k) {
    Vec y = sys.map_eval(seg.points.back());
    if (!sys.basin.contains(y, 1e-12))
      throw OpError("orbit-escapes-basin",
                    sys.name + " left the basin at step " + std::to_string(k + 1));
    seg.points.push_back(std::move(y));
  }
  if (with_derivatives) {
    seg.derivative_frames.reserve(seg.points.size());
    for (const auto& p : seg.points) seg.derivative_frames.push_back(sys.deriv_eval(p));
  }
  return seg;
}

std::vector<Vec> long_orbit(const SystemSpec& sys, const Vec& x, int n,
                            std::uint64_t aux_seed) {
  if (sys.accurate_orbit) return sys.accurate_orbit(x, n, aux_seed);
  return iterate(sys, x, n).points;
}

std::vector<Vec> attractor_sample(const SystemSpec& sys, int seed_count, int burn_in,
                                  std::uint64_t seed) {
  if (seed_count < 1) throw OpError("bad-argument", "seed_count must be >= 1");
  auto rng = make_rng(seed, /*stream=*/1);
  std::vector<Vec> out;
  out.reserve(static_cast<size_t>(seed_count));
  for (int i = 0; i < seed_count; ++i) {
    Vec u = uniform_in_box(sys.basin, rng);
    out.push_back(long_orbit(sys, u, burn_in, seed ^ (0x51ULL + i)).back());
  }
  return out;
}

std::vector<SampledOrbit> attractor_orbits(const SystemSpec& sys, int count, int burn_in,
                                           int history_depth, std::uint64_t seed) {
  if (history_depth > burn_in)
    throw OpError("bad-argument", "history_depth cannot exceed burn_in");
  auto rng = make_rng(seed, /*stream=*/1);
  std::vector<SampledOrbit> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    Vec u = uniform_in_box(sys.basin, rng);
    auto seg = long_orbit(sys, u, burn_in, seed ^ (0x51ULL + i));
    SampledOrbit so;
    so.point = seg.back();
    so.history.anchor = seg.back();
    for (int k = 1; k <= history_depth; ++k) {
      const Vec& pre = seg[static_cast<size_t>(burn_in - k)];
      so.history.preimages.push_back(pre);
      so.history.residuals.push_back(
          sys.dist(sys.map_eval(pre), seg[static_cast<size_t>(burn_in - k + 1)]));
    }
    out.push_back(std::move(so));
  }
  return out;
}

namespace {

// Damped Newton for f(x) = y with a least-squares step (the derivative can be
// numerically rank-deficient along strongly contracting directions).
bool newton_preimage(const SystemSpec& sys, const Vec& y, Vec& x, double tol) {
  const int max_iter = 50;
  Vec r = sys.diff(sys.map_eval(x), y);
  for (int it = 0; it < max_iter; ++it) {
    if (r.norm() <= tol) return true;
    Mat j = sys.deriv_eval(x);
    Eigen::JacobiSVD<Mat> svd(j, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    Vec step = svd.solve(r);
    double damping = 1.0;
    for (int h = 0; h < 30; ++h) {
      Vec cand = sys.wrap(x - damping * step);
      if (sys.basin.contains(cand, 0.2)) {
        Vec rc = sys.diff(sys.map_eval(cand), y);
        if (rc.norm() < r.norm()) {
          x = cand;
          r = rc;
          break;
        }
      }
      damping *= 0.5;
      if (h == 29) return r.norm() <= tol;
    }
  }
  return r.norm() <= tol;
}

}  // namespace

BackwardOrbit inverse_on_attractor(const SystemSpec& sys, const Vec& y, int depth,
                                   const std::vector<SampledOrbit>* seeds, double tol) {
  BackwardOrbit bwd;
  bwd.anchor = y;
  Vec cur = y;
  for (int k = 0; k < depth; ++k) {
    Vec pre;
    if (sys.has_inverse()) {
      pre = sys.known_inverse(cur);
    } else {
      // Collect candidate seeds: predecessors of samples closest to cur.
      std::vector<Vec> candidates;
      if (seeds != nullptr && !seeds->empty()) {
        std::vector<std::pair<double, const SampledOrbit*>> ranked;
        ranked.reserve(seeds->size());
        for (const auto& s : *seeds)
          if (s.history.depth() >= 1) ranked.push_back({sys.dist(s.point, cur), &s});
        std::sort(ranked.begin(), ranked.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (size_t i = 0; i < std::min<size_t>(8, ranked.size()); ++i)
          candidates.push_back(ranked[i].second->history.preimage(1));
      }
      candidates.push_back(cur);  // last resort
      std::vector<Vec> found;
      for (auto cand : candidates) {
        if (newton_preimage(sys, cur, cand, tol)) {
          bool duplicate = false;
          for (const auto& g : found)
            if (sys.dist(g, cand) < 1e-6) duplicate = true;
          if (!duplicate) found.push_back(cand);
        }
      }
      if (found.empty())
        throw OpError("no-preimage-found",
                      "Newton failed from all seeds at depth " + std::to_string(k + 1));
      if (found.size() > 1)
        throw OpError("branch-ambiguous",
                      "two distinct preimages converged at depth " + std::to_string(k + 1));
      pre = found.front();
    }
    double res = sys.dist(sys.map_eval(pre), cur);
    if (res > tol)
      throw OpError("no-preimage-found", "residual " + std::to_string(res) +
                                             " exceeds tolerance at depth " +
                                             std::to_string(k + 1));
    bwd.preimages.push_back(pre);
    bwd.residuals.push_back(res);
    cur = pre;
  }
  return bwd;
}

HyperbolicityReport verify_hyperbolicity(const SystemSpec& sys, const SplittingField& field,
                                         double rate, bool uniform,
                                         const std::vector<Vec>& samples) {
  HyperbolicityReport rep;
  rep.rate = rate;
  rep.uniform_mode = uniform;
  rep.min_unstable_ratio = std::numeric_limits<double>::infinity();
  rep.max_center_stable_ratio = 0.0;
  for (const auto& x : samples) {
    const Mat df = sys.deriv_eval(x);
    const Mat eu = field.unstable(x);
    const Mat ecs = field.center_stable(x);
    for (int j = 0; j < eu.cols(); ++j) {
      double r = (df * eu.col(j)).norm() / eu.col(j).norm();
      if (r < rep.min_unstable_ratio) {
        rep.min_unstable_ratio = r;
        rep.worst_unstable_witness = x;
      }
    }
    for (int j = 0; j < ecs.cols(); ++j) {
      double r = (df * ecs.col(j)).norm() / ecs.col(j).norm();
      if (r > rep.max_center_stable_ratio) {
        rep.max_center_stable_ratio = r;
        rep.worst_center_stable_witness = x;
      }
    }
  }
  const double slack = 1e-12;
  const double cs_bound = uniform ? std::exp(-rate) : 1.0;
  rep.passed = rep.min_unstable_ratio >= std::exp(rate) - slack &&
               rep.max_center_stable_ratio <= cs_bound + slack;
  return rep;
}

SystemSpec iterate_system(const SystemSpec& sys, int power) {
  if (power < 1) throw OpError("bad-argument", "power must be >= 1");
  SystemSpec out = sys;
  out.name = sys.name + "^" + std::to_string(power);
  out.map_eval = [sys, power](const Vec& x) {
    Vec y = x;
    for (int i = 0; i < power; ++i) y = sys.map_eval(y);
    return y;
  };
  out.deriv_eval = [sys, power](const Vec& x) {
    Vec y = x;
    Mat j = Mat::Identity(sys.dim, sys.dim);
    for (int i = 0; i < power; ++i) {
      j = sys.deriv_eval(y) * j;
      y = sys.map_eval(y);
    }
    return j;
  };
  if (sys.has_inverse()) {
    out.known_inverse = [sys, power](const Vec& y) {
      Vec x = y;
      for (int i = 0; i < power; ++i) x = sys.known_inverse(x);
      return x;
    };
  }
  return out;
}

SystemSpec make_linear_system(const Vec& diagonal) {
  Mat m = diagonal.asDiagonal();
  return make_linear_system(m);
}

SystemSpec make_linear_system(const Mat& matrix) {
  SystemSpec sys;
  const int d = static_cast<int>(matrix.rows());
  sys.name = "linear";
  sys.dim = d;
  sys.unstable_dim = 0;
  Eigen::JacobiSVD<Mat> svd(matrix);
  for (int i = 0; i < d; ++i)
    if (svd.singularValues()[i] > 1.0) ++sys.unstable_dim;
  if (sys.unstable_dim == 0) sys.unstable_dim = 1;
  sys.basin.lo = Vec::Constant(d, -1e6);
  sys.basin.hi = Vec::Constant(d, 1e6);
  sys.map_eval = [matrix](const Vec& x) { return Vec(matrix * x); };
  sys.deriv_eval = [matrix](const Vec&) { return matrix; };
  Eigen::FullPivLU<Mat> lu(matrix);
  if (lu.isInvertible()) {
    Mat inv = lu.inverse();
    sys.known_inverse = [inv](const Vec& y) { return Vec(inv * y); };
  }
  return sys;
}

}  // namespace srb
