#include "srb/charts.hpp"

#include <cmath>

namespace srb {

namespace {

double spectral_norm(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()[0];
}

double smallest_singular(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues().minCoeff();
}

}  // namespace

OrbitFrames splittings_along(const SystemSpec& sys, const std::vector<Vec>& chain, int lo,
                             int hi, int du, int lookahead, std::uint64_t seed) {
  if (lo < 0 || hi >= static_cast<int>(chain.size()) || lo > hi)
    throw OpError("bad-argument", "frame window outside the chain");
  OrbitFrames out;
  out.lo = lo;
  auto rng = make_rng(seed, 61);

  Mat frame = random_orthonormal(sys.dim, du, rng);
  for (int k = 0; k < lo; ++k)
    frame = orthonormalize(sys.deriv_eval(chain[static_cast<size_t>(k)]) * frame);
  for (int i = lo; i <= hi; ++i) {
    if (i > lo)
      frame = orthonormalize(sys.deriv_eval(chain[static_cast<size_t>(i - 1)]) * frame);
    out.eu.push_back(frame);
  }

  Mat probe = random_orthonormal(sys.dim, du, rng);
  for (int i = lo; i <= hi; ++i) {
    int top = std::min(static_cast<int>(chain.size()) - 1, i + lookahead);
    Mat co = probe;
    for (int j = top - 1; j >= i; --j)
      co = orthonormalize(sys.deriv_eval(chain[static_cast<size_t>(j)]).transpose() * co);
    // stable = orthogonal complement of the expanding coframe
    Eigen::HouseholderQR<Mat> qr(co);
    Mat full = qr.householderQ() * Mat::Identity(sys.dim, sys.dim);
    out.es.push_back(full.rightCols(sys.dim - du));
  }
  return out;
}

ChartSequence::ChartSequence(const SystemSpec& sys, std::vector<Vec> points,
                             std::vector<Mat> frames, int du)
    : sys_(&sys), points_(std::move(points)), frames_(std::move(frames)), du_(du) {
  if (points_.size() != frames_.size() || points_.size() < 2)
    throw OpError("bad-argument", "chart sequence needs one frame per orbit point");
  frames_inv_.reserve(frames_.size());
  for (const auto& b : frames_) frames_inv_.push_back(b.inverse());
  radii_.assign(points_.size(), 0.0);
  linearized_.assign(points_.size(), false);
  const int d = sys_->dim;
  for (int i = 0; i + 1 < static_cast<int>(points_.size()); ++i) {
    Mat dg0 = frames_inv_[static_cast<size_t>(i + 1)] *
              sys_->deriv_eval(points_[static_cast<size_t>(i)]) *
              frames_[static_cast<size_t>(i)];
    lin_u_.push_back(dg0.topLeftCorner(du_, du_));
    lin_s_.push_back(dg0.bottomRightCorner(d - du_, d - du_));
  }
}

Vec ChartSequence::to_chart(int i, const Vec& ambient) const {
  return frames_inv_.at(static_cast<size_t>(i)) *
         sys_->diff(ambient, points_.at(static_cast<size_t>(i)));
}

Vec ChartSequence::to_ambient(int i, const Vec& w) const {
  return sys_->wrap(points_.at(static_cast<size_t>(i)) +
                    frames_.at(static_cast<size_t>(i)) * w);
}

Vec ChartSequence::apply_map(int i, const Vec& w) const {
  if (linearized_.at(static_cast<size_t>(i))) {
    Vec out = Vec::Zero(w.size());
    out.head(du_) = lin_u_[static_cast<size_t>(i)] * w.head(du_);
    out.tail(w.size() - du_) = lin_s_[static_cast<size_t>(i)] * w.tail(w.size() - du_);
    return out;
  }
  return to_chart(i + 1, sys_->map_eval(to_ambient(i, w)));
}

Mat ChartSequence::map_deriv(int i, const Vec& w) const {
  if (linearized_.at(static_cast<size_t>(i))) {
    Mat out = Mat::Zero(w.size(), w.size());
    out.topLeftCorner(du_, du_) = lin_u_[static_cast<size_t>(i)];
    out.bottomRightCorner(w.size() - du_, w.size() - du_) = lin_s_[static_cast<size_t>(i)];
    return out;
  }
  return frames_inv_.at(static_cast<size_t>(i + 1)) *
         sys_->deriv_eval(to_ambient(i, w)) * frames_.at(static_cast<size_t>(i));
}

Vec ChartSequence::remainder(int i, const Vec& w) const {
  Vec lin = Vec::Zero(w.size());
  lin.head(du_) = lin_u_.at(static_cast<size_t>(i)) * w.head(du_);
  lin.tail(w.size() - du_) = lin_s_.at(static_cast<size_t>(i)) * w.tail(w.size() - du_);
  return apply_map(i, w) - lin;
}

Mat ChartSequence::remainder_deriv(int i, const Vec& w) const {
  Mat lin = Mat::Zero(w.size(), w.size());
  lin.topLeftCorner(du_, du_) = lin_u_.at(static_cast<size_t>(i));
  lin.bottomRightCorner(w.size() - du_, w.size() - du_) = lin_s_.at(static_cast<size_t>(i));
  return map_deriv(i, w) - lin;
}

void ChartSequence::calibrate(double lambda1, double delta1, double delta2, int probe_count,
                              std::uint64_t seed) {
  lambda1_ = lambda1;
  delta1_ = delta1;
  delta2_ = delta2;
  const double up = std::exp(lambda1), down = std::exp(-lambda1);
  for (int i = 0; i < steps(); ++i) {
    double sigma = smallest_singular(lin_u_[static_cast<size_t>(i)]);
    if (sigma < up - 1e-12)
      throw OpError("conditions-violated",
                    "expansion block at step " + std::to_string(i) + " has rate " +
                        std::to_string(sigma) + " < e^lambda1 (condition I)");
    double snorm = spectral_norm(lin_s_[static_cast<size_t>(i)]);
    if (snorm > down + 1e-12)
      throw OpError("conditions-violated",
                    "contraction block at step " + std::to_string(i) + " has norm " +
                        std::to_string(snorm) + " > e^-lambda1 (condition I)");
  }

  // Candidate radius from the second-derivative scale, then shrink until the
  // sampled remainder bound holds everywhere.
  auto rng = make_rng(seed, 71);
  const int d = sys_->dim;
  double r = 0.25;
  for (int attempt = 0; attempt < 60; ++attempt) {
    double worst_dg = 0, worst_g0 = 0, worst_lip = 0, worst_bound = 0;
    bool ok = true;
    for (int i = 0; i < steps() && ok; ++i) {
      worst_g0 = std::max(worst_g0, remainder(i, Vec::Zero(d)).norm());
      if (worst_g0 >= delta2 * r) {
        ok = false;
        break;
      }
      std::vector<Vec> probes;
      probes.push_back(Vec::Zero(d));
      for (int a = 0; a < d; ++a) {
        probes.push_back(r * Vec::Unit(d, a));
        probes.push_back(-r * Vec::Unit(d, a));
      }
      for (int t = 0; t < probe_count; ++t) probes.push_back(r * random_unit(d, rng));
      std::vector<Mat> dgs;
      for (const auto& w : probes) dgs.push_back(remainder_deriv(i, w));
      for (const auto& dg : dgs) worst_dg = std::max(worst_dg, spectral_norm(dg));
      if (worst_dg >= delta2) {
        ok = false;
        break;
      }
      for (size_t a = 0; a + 1 < probes.size(); ++a)
        for (size_t b = a + 1; b < probes.size(); ++b) {
          double dist = (probes[a] - probes[b]).norm();
          if (dist > 1e-9)
            worst_lip = std::max(worst_lip, (dgs[a] - dgs[b]).norm() / dist);
        }
      for (const auto& w : probes)
        worst_bound = std::max(worst_bound, spectral_norm(map_deriv(i, w)));
    }
    if (ok) {
      radii_.assign(points_.size(), r);
      lip_dg_ = worst_lip * 1.25;
      dg_bound_ = worst_bound * 1.05;
      return;
    }
    r *= 0.7;
    if (r < 1e-7)
      throw OpError("conditions-violated",
                    "no radius satisfies the remainder bound (condition II); "
                    "lambda1/delta2 too aggressive");
  }
  throw OpError("conditions-violated", "radius search did not terminate");
}

void ChartSequence::linearize_tail(int from) {
  for (int i = from; i < steps(); ++i) linearized_[static_cast<size_t>(i)] = true;
}

std::shared_ptr<ChartSequence> build_charts(const SystemSpec& sys,
                                            const std::vector<Vec>& chain, int lo, int hi,
                                            int du, double lambda1, double delta1,
                                            double delta2) {
  auto frames_data = splittings_along(sys, chain, lo, hi, du);
  std::vector<Vec> pts(chain.begin() + lo, chain.begin() + hi + 1);
  std::vector<Mat> frames;
  frames.reserve(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    Mat b(sys.dim, sys.dim);
    b << frames_data.eu[i], frames_data.es[i];
    frames.push_back(b);
  }
  auto charts = std::make_shared<ChartSequence>(sys, std::move(pts), std::move(frames), du);
  charts->calibrate(lambda1, delta1, delta2);
  return charts;
}

}  // namespace srb
