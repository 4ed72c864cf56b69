#include "srb/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "srb/builtin_systems.hpp"

namespace srb {

int LyapunovSpectrum::total_multiplicity() const {
  int m = 0;
  for (const auto& e : entries) m += e.multiplicity;
  return m;
}

double LyapunovSpectrum::positive_sum() const {
  double s = 0;
  for (const auto& e : entries)
    if (e.exponent > 0) s += e.exponent * e.multiplicity;
  return s;
}

Splitting Splitting::from_bases(const Mat& eu, const Mat& ecs) {
  Splitting s;
  s.unstable = eu;
  s.center_stable = ecs;
  const int d = static_cast<int>(eu.rows());
  Mat basis(d, d);
  basis << eu, ecs;
  Mat inv = basis.inverse();
  s.proj_unstable = eu * inv.topRows(eu.cols());
  s.proj_center_stable = Mat::Identity(d, d) - s.proj_unstable;
  return s;
}

double AdaptedNorm::norm(const Vec& v) const { return std::sqrt(v.dot(gram * v)); }

LyapunovSpectrum lyapunov_spectrum(const SystemSpec& sys, const Vec& x, int n,
                                   int reorth_every, double cluster_tol) {
  if (reorth_every < 1) reorth_every = 1;
  const int d = sys.dim;
  Mat q = Mat::Identity(d, d);
  Vec sums = Vec::Zero(d);
  Vec cur = sys.wrap(x);
  int since = 0;
  Mat acc = q;
  for (int k = 0; k < n; ++k) {
    acc = sys.deriv_eval(cur) * acc;
    cur = sys.map_eval(cur);
    if (++since == reorth_every || k == n - 1) {
      Eigen::HouseholderQR<Mat> qr(acc);
      Mat r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
      q = qr.householderQ() * Mat::Identity(d, d);
      for (int i = 0; i < d; ++i) {
        double diag = std::abs(r(i, i));
        if (diag < 1e-300)
          throw OpError("degenerate-cocycle", "triangular factor underflow");
        sums[i] += std::log(diag);
        if (r(i, i) < 0) q.col(i) = -q.col(i);
      }
      acc = q;
      since = 0;
    }
  }
  std::vector<double> exps(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) exps[static_cast<size_t>(i)] = sums[i] / n;
  std::sort(exps.rbegin(), exps.rend());

  LyapunovSpectrum spec;
  for (size_t i = 0; i < exps.size();) {
    size_t j = i + 1;
    double sum = exps[i];
    while (j < exps.size() && exps[j - 1] - exps[j] < cluster_tol) {
      sum += exps[j];
      ++j;
    }
    spec.entries.push_back({sum / static_cast<double>(j - i), static_cast<int>(j - i)});
    i = j;
  }
  return spec;
}

namespace {

double spectral_norm(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()[0];
}

Mat orthogonal_complement(const Mat& basis) {
  const int d = static_cast<int>(basis.rows());
  Eigen::HouseholderQR<Mat> qr(basis);
  Mat full = qr.householderQ() * Mat::Identity(d, d);
  return full.rightCols(d - basis.cols());
}

Mat push_frame_forward(const SystemSpec& sys, const BackwardOrbit& bwd, int from_depth,
                       Mat frame) {
  for (int k = from_depth; k >= 1; --k) {
    frame = orthonormalize(sys.deriv_eval(bwd.point(k)) * frame);
  }
  return frame;
}

Mat pull_coframe_back(const SystemSpec& sys, const std::vector<Vec>& orbit, int from_step,
                      Mat coframe) {
  for (int k = from_step - 1; k >= 0; --k) {
    coframe = orthonormalize(sys.deriv_eval(orbit[static_cast<size_t>(k)]).transpose() *
                             coframe);
  }
  return coframe;
}

}  // namespace

Splitting unstable_subspace(const SystemSpec& sys, const BackwardOrbit& bwd, int du,
                            std::uint64_t seed, double gap_tol) {
  const int n = bwd.depth();
  if (n < 6) throw OpError("bad-argument", "backward depth too small");
  auto rng = make_rng(seed, 21);
  Mat start = random_orthonormal(sys.dim, du, rng);
  Mat deep = push_frame_forward(sys, bwd, n, start);
  Mat shallow = push_frame_forward(sys, bwd, n - 5, start);
  double gap = kato_gap(deep, shallow);
  if (gap > gap_tol)
    throw OpError("not-converged",
                  "unstable frame gap " + std::to_string(gap) + "; increase depth");
  Splitting s = Splitting::from_bases(deep, orthogonal_complement(deep));
  s.convergence_gap = gap;
  return s;
}

Splitting stable_subspace(const SystemSpec& sys, const Vec& x, int n, int du,
                          std::uint64_t seed, double gap_tol) {
  OrbitSegment seg = iterate(sys, x, n);
  auto rng = make_rng(seed, 22);
  Mat start = random_orthonormal(sys.dim, du, rng);
  Mat co_deep = pull_coframe_back(sys, seg.points, n, start);
  Mat co_shallow = pull_coframe_back(sys, seg.points, n - 5, start);
  double gap = kato_gap(co_deep, co_shallow);
  if (gap > gap_tol)
    throw OpError("not-converged",
                  "expanding coframe gap " + std::to_string(gap) + "; increase steps");
  Mat ecs = orthogonal_complement(co_deep);
  Splitting s = Splitting::from_bases(orthogonal_complement(ecs), ecs);
  s.convergence_gap = gap;
  return s;
}

namespace {

// sup over unit v in span(e) of the distance to the unit sphere of span(f),
// via the largest residual angle.  The sine form stays accurate for nearly
// equal subspaces where the cosine form loses half the digits.
double one_sided_gap(const Mat& e, const Mat& f) {
  Mat residual = e - f * (f.transpose() * e);
  double s = std::min(1.0, spectral_norm(residual));  // sin of the worst angle
  if (s < 1e-4) return s * (1.0 + s * s / 8.0);       // 2 sin(asin(s)/2), small-angle
  double c = std::sqrt(std::max(0.0, (1.0 - s) * (1.0 + s)));
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * c));  // = 2 sin(theta/2)
}

}  // namespace

double kato_gap(const Mat& e, const Mat& f) {
  if (e.rows() != f.rows()) throw OpError("dimension-mismatch", "ambient dimensions differ");
  if (e.cols() == 0 || f.cols() == 0) throw OpError("bad-argument", "empty subspace");
  Mat eo = orthonormalize(e), fo = orthonormalize(f);
  return std::max(one_sided_gap(eo, fo), one_sided_gap(fo, eo));
}

HolderReport holder_exponent_estimate(const SystemSpec& sys, char which, int n_pairs,
                                      std::uint64_t seed, double fit_slack) {
  HolderReport rep;
  const int du = sys.unstable_dim;
  const int history = 45;
  auto orbits = attractor_orbits(sys, std::max(400, n_pairs / 2), 150, history, seed);

  const bool analytic = sys.has_splitting();
  SplittingField field;
  if (analytic) field = sys.known_splitting(sys);
  auto subspace_at = [&](const SampledOrbit& so) -> Mat {
    if (analytic)
      return which == 'u' ? field.unstable(so.point) : field.center_stable(so.point);
    if (which == 'u') return unstable_subspace(sys, so.history, du).unstable;
    return stable_subspace(sys, so.point, 40, du).center_stable;
  };

  // Uniform one-step rates of the cocycle restricted to the splitting; the
  // bound formula wants the uniform expansion/contraction constants, not
  // Lyapunov averages.
  double min_exp = std::numeric_limits<double>::infinity(), max_con = 0, sup_df = 0;
  {
    SplittingField rate_field =
        analytic ? field
                 : SplittingField{
                       [&](const Vec&) { return Mat::Identity(sys.dim, sys.dim).leftCols(du); },
                       [&](const Vec&) {
                         return Mat::Identity(sys.dim, sys.dim).rightCols(sys.dim - du);
                       }};
    for (size_t i = 0; i < orbits.size(); ++i) {
      const Mat df = sys.deriv_eval(orbits[i].point);
      sup_df = std::max(sup_df, spectral_norm(df));
      if (!analytic) continue;
      Eigen::JacobiSVD<Mat> su(df * rate_field.unstable(orbits[i].point));
      min_exp = std::min(min_exp, su.singularValues().minCoeff());
      max_con = std::max(max_con, spectral_norm(df * rate_field.center_stable(orbits[i].point)));
    }
  }
  if (!analytic) {
    // fall back to cocycle averages with a margin
    auto spec = lyapunov_spectrum(sys, orbits.front().point, 3000);
    min_exp = std::exp(0.8 * spec.entries.front().exponent);
    max_con = std::exp(spec.entries.size() > 1 ? spec.entries[1].exponent
                                               : spec.entries.front().exponent - 1.0);
  }
  rep.lambda1 = std::log(min_exp);
  rep.lambda2 = std::log(max_con);

  double lip_fwd = 0, lip_bwd = 1.0;
  auto rng = make_rng(seed, 31);
  std::uniform_int_distribution<size_t> pick(0, orbits.size() - 1);
  for (int t = 0; t < 2000; ++t) {
    const auto& a = orbits[pick(rng)];
    const auto& b = orbits[pick(rng)];
    double dist = sys.dist(a.point, b.point);
    if (dist < 1e-12 || dist > 0.05) continue;
    lip_fwd = std::max(lip_fwd, sys.dist(sys.map_eval(a.point), sys.map_eval(b.point)) / dist);
    if (a.history.depth() > 0 && b.history.depth() > 0)
      lip_bwd = std::max(lip_bwd, sys.dist(a.history.preimage(1), b.history.preimage(1)) / dist);
  }
  const double a_const = 1.001 * sup_df * std::max(1.0, which == 'u' ? lip_bwd : lip_fwd);
  rep.log_a = std::log(a_const);
  rep.predicted_lower_bound = which == 'u'
                                  ? (rep.lambda1 - rep.lambda2) / (rep.log_a - rep.lambda1)
                                  : (rep.lambda1 - rep.lambda2) / (rep.log_a - rep.lambda2);

  // Pair gaps bucketed by distance decade; median per bucket.
  struct Obs {
    double log_dist, log_gap;
  };
  std::vector<Obs> obs;
  double max_gap = 0;
  for (int t = 0; t < 20 * n_pairs && static_cast<int>(obs.size()) < n_pairs; ++t) {
    const auto& a = orbits[pick(rng)];
    const auto& b = orbits[pick(rng)];
    double dist = sys.dist(a.point, b.point);
    if (dist < 1e-7 || dist > 0.2) continue;
    double gap = kato_gap(subspace_at(a), subspace_at(b));
    max_gap = std::max(max_gap, gap);
    if (gap > 1e-13) obs.push_back({std::log(dist), std::log(gap)});
  }
  rep.pairs_used = static_cast<int>(obs.size());
  if (max_gap < 1e-12) {
    rep.constant_field = true;
    rep.empirical_exponent = std::numeric_limits<double>::infinity();
    rep.passed = true;
    return rep;
  }
  if (obs.size() < 20) throw OpError("insufficient-pairs", "too few usable pairs");

  std::map<int, std::vector<double>> buckets;
  for (const auto& o : obs) buckets[static_cast<int>(std::floor(o.log_dist / std::log(10.0)))]
      .push_back(o.log_gap);
  std::vector<double> xs, ys;
  for (auto& [decade, gaps] : buckets) {
    if (gaps.size() < 5) continue;
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    xs.push_back((decade + 0.5) * std::log(10.0));
    ys.push_back(gaps[gaps.size() / 2]);
  }
  if (xs.size() < 2) throw OpError("insufficient-pairs", "pairs span too few distance decades");
  double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double num = 0, den = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  rep.empirical_exponent = num / den;
  rep.passed = rep.empirical_exponent >= rep.predicted_lower_bound - fit_slack;
  return rep;
}

namespace {

// Orthonormal stable frames along a forward orbit, each computed
// independently by pulling the expanding coframe back from `lookahead`
// steps ahead; forward-pushing stable frames would amplify rounding.
std::vector<Mat> stable_frames_along(const SystemSpec& sys, const std::vector<Vec>& orbit,
                                     int upto, int lookahead, int du, std::mt19937_64& rng) {
  std::vector<Mat> frames;
  frames.reserve(static_cast<size_t>(upto) + 1);
  Mat probe = random_orthonormal(sys.dim, du, rng);
  for (int k = 0; k <= upto; ++k) {
    Mat co = probe;
    for (int j = k + lookahead - 1; j >= k; --j)
      co = orthonormalize(sys.deriv_eval(orbit[static_cast<size_t>(j)]).transpose() * co);
    frames.push_back(orthogonal_complement(co));
  }
  return frames;
}

}  // namespace

AdaptedNorm lyapunov_norm(const SystemSpec& sys, const SampledOrbit& at, double lambda,
                          double delta0, int horizon, std::uint64_t seed) {
  const int d = sys.dim;
  const int du = sys.unstable_dim;
  const int ds = d - du;
  const int fwd_buffer = 40;
  if (at.history.depth() < horizon + 6)
    throw OpError("bad-argument", "history shorter than the requested horizon");

  auto rng = make_rng(seed, 41);

  // Build the adapted Gram at orbit position `shift` (0 = anchor, 1 = f(anchor)).
  auto build_gram = [&](int shift, double* tail_out) -> Mat {
    // Backward chain of the evaluation point: bw[0] is the point itself.
    std::vector<Vec> bw;
    if (shift == 0) {
      for (int k = 0; k <= at.history.depth(); ++k) bw.push_back(at.history.point(k));
    } else {
      bw.push_back(sys.map_eval(at.history.anchor));
      for (int k = 0; k < at.history.depth(); ++k) bw.push_back(at.history.point(k));
    }
    const int depth = horizon;

    // Unstable frames from the deepest preimage up to the evaluation point;
    // the stretch below the horizon only warms the frame up.
    Mat frame = random_orthonormal(d, du, rng);
    for (int k = static_cast<int>(bw.size()) - 1; k > depth; --k)
      frame = orthonormalize(sys.deriv_eval(bw[static_cast<size_t>(k)]) * frame);
    std::vector<Mat> r_factors;  // r_factors[depth - n] transports level n -> n-1
    r_factors.reserve(static_cast<size_t>(depth));
    for (int k = depth; k >= 1; --k) {
      Mat pushed = sys.deriv_eval(bw[static_cast<size_t>(k)]) * frame;
      Eigen::HouseholderQR<Mat> qr(pushed);
      Mat q = qr.householderQ() * Mat::Identity(d, du);
      Mat r = qr.matrixQR().topRows(du).triangularView<Eigen::Upper>();
      for (int i = 0; i < du; ++i)
        if (r(i, i) < 0) {
          q.col(i) = -q.col(i);
          r.row(i) = -r.row(i);
        }
      frame = q;
      r_factors.push_back(r);
    }
    Mat u0 = frame;

    Mat gram_u = Mat::Zero(du, du);
    Mat prod = Mat::Identity(du, du);  // R_1 R_2 ... R_n
    double tail_u = 0, total_u = 0;
    for (int n = 0; n <= depth; ++n) {
      if (n > 0) prod = prod * r_factors[static_cast<size_t>(depth - n)];
      Mat pinv = prod.inverse();
      Mat term = std::exp(2.0 * n * lambda) * pinv.transpose() * pinv;
      gram_u += term;
      tail_u = term.trace();
      total_u += term.trace();
    }

    // Stable part along the forward orbit.
    std::vector<Vec> fwd;
    fwd.push_back(shift == 0 ? at.history.anchor : sys.map_eval(at.history.anchor));
    for (int k = 0; k < horizon + fwd_buffer; ++k) fwd.push_back(sys.map_eval(fwd.back()));
    auto sframes = stable_frames_along(sys, fwd, horizon, fwd_buffer, du, rng);
    Mat gram_s = Mat::Zero(ds, ds);
    Mat sprod = Mat::Identity(ds, ds);
    double tail_s = 0, total_s = 0;
    for (int n = 0; n <= horizon; ++n) {
      if (n > 0) {
        Mat t = sframes[static_cast<size_t>(n)].transpose() *
                sys.deriv_eval(fwd[static_cast<size_t>(n - 1)]) *
                sframes[static_cast<size_t>(n - 1)];
        sprod = t * sprod;
      }
      Mat term = std::exp(2.0 * n * lambda) * sprod.transpose() * sprod;
      gram_s += term;
      tail_s = term.trace();
      total_s += term.trace();
    }
    if (tail_out != nullptr)
      *tail_out = std::max(tail_u / total_u, tail_s / total_s);

    Mat basis(d, d);
    basis << u0, sframes.front();
    Mat inv = basis.inverse();
    Mat block = Mat::Zero(d, d);
    block.topLeftCorner(du, du) = gram_u;
    block.bottomRightCorner(ds, ds) = gram_s;
    return inv.transpose() * block * inv;
  };

  double tail = 0;
  AdaptedNorm norm;
  norm.gram = build_gram(0, &tail);
  norm.tail_ratio = tail;
  Eigen::SelfAdjointEigenSolver<Mat> eig(norm.gram);
  norm.distortion = std::sqrt(eig.eigenvalues().maxCoeff());

  const double tail_budget = std::max(1e-12, 1.0 - std::exp(-2.0 * delta0));
  if (tail > tail_budget)
    throw OpError("tail-not-converged",
                  "series tail ratio " + std::to_string(tail) + " exceeds budget");

  // One-step bound check against the norm at the image point.
  AdaptedNorm next;
  next.gram = build_gram(1, nullptr);
  const Vec& x = at.history.anchor;
  Mat df = sys.deriv_eval(x);
  Mat eu = unstable_subspace(sys, at.history, du).unstable;
  Mat es = stable_subspace(sys, x, 40, du).center_stable;
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double up = std::exp(lambda - 2.0 * delta0);
  const double down = std::exp(-lambda + 2.0 * delta0);
  for (int t = 0; t < 100; ++t) {
    Vec cu(du), cs(ds);
    for (int i = 0; i < du; ++i) cu[i] = gauss(rng);
    for (int i = 0; i < ds; ++i) cs[i] = gauss(rng);
    Vec u = eu * cu, s = es * cs;
    if (next.norm(df * u) < up * norm.norm(u) - 1e-12)
      throw OpError("tail-not-converged", "one-step expansion bound failed");
    if (next.norm(df * s) > down * norm.norm(s) + 1e-12)
      throw OpError("tail-not-converged", "one-step contraction bound failed");
    Vec p = Vec(eu * cu) + Vec(es * cs);
    if (norm.norm(p) < std::sqrt(3.0) / 3.0 * p.norm() - 1e-9)
      throw OpError("tail-not-converged", "lower frame bound failed");
  }
  return norm;
}

}  // namespace srb
