#include "srb/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace srb {

bool Box::contains(const Vec& x, double tol) const {
  for (int i = 0; i < dim(); ++i) {
    if (is_periodic(i)) continue;
    if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
  }
  return true;
}

double Box::diameter() const {
  double s = 0;
  for (int i = 0; i < dim(); ++i) {
    double w = is_periodic(i) ? 0.5 : (hi[i] - lo[i]);
    s += w * w;
  }
  return std::sqrt(s);
}

Vec wrap_point(const Vec& x, const Box& box) {
  Vec y = x;
  for (int i = 0; i < box.dim(); ++i) {
    if (box.is_periodic(i)) {
      y[i] = y[i] - std::floor(y[i]);
      if (y[i] >= 1.0) y[i] = 0.0;  // guard against floor rounding
    }
  }
  return y;
}

Vec wrap_diff(const Vec& a, const Vec& b, const Box& box) {
  Vec d = a - b;
  for (int i = 0; i < box.dim(); ++i) {
    if (box.is_periodic(i)) {
      d[i] = d[i] - std::round(d[i]);
    }
  }
  return d;
}

double distance(const Vec& a, const Vec& b, const Box& box) {
  return wrap_diff(a, b, box).norm();
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 scramble of (seed, stream) so nearby seeds decorrelate
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z = z ^ (z >> 31);
  return std::mt19937_64(z);
}

Vec uniform_in_box(const Box& box, std::mt19937_64& rng) {
  Vec x(box.dim());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < box.dim(); ++i) {
    double u = unit(rng);
    x[i] = box.is_periodic(i) ? u : box.lo[i] + u * (box.hi[i] - box.lo[i]);
  }
  return x;
}

Vec random_unit(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(dim);
  do {
    for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

Mat random_orthonormal(int dim, int k, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat m(dim, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < dim; ++i) m(i, j) = gauss(rng);
  return orthonormalize(m);
}

Mat orthonormalize(const Mat& basis) {
  Eigen::HouseholderQR<Mat> qr(basis);
  Mat q = qr.householderQ() * Mat::Identity(basis.rows(), basis.cols());
  Mat r = qr.matrixQR().topRows(basis.cols()).triangularView<Eigen::Upper>();
  for (int j = 0; j < basis.cols(); ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

std::vector<double> principal_angles(const Mat& e, const Mat& f) {
  const Mat cross = e.transpose() * f;
  Eigen::JacobiSVD<Mat> svd(cross);
  const auto& sv = svd.singularValues();
  const int n = static_cast<int>(std::max(e.cols(), f.cols()));
  std::vector<double> angles;
  angles.reserve(static_cast<size_t>(n));
  for (int i = 0; i < sv.size(); ++i) {
    angles.push_back(std::acos(std::clamp(sv[i], -1.0, 1.0)));
  }
  while (static_cast<int>(angles.size()) < n) angles.push_back(M_PI / 2.0);
  std::sort(angles.begin(), angles.end());
  return angles;
}

Box bounding_box(const std::vector<Vec>& points, const Box& topology, double pad) {
  Box out = topology;
  if (points.empty()) return out;
  out.lo = points.front();
  out.hi = points.front();
  for (const auto& p : points) {
    out.lo = out.lo.cwiseMin(p);
    out.hi = out.hi.cwiseMax(p);
  }
  for (int i = 0; i < out.dim(); ++i) {
    if (out.is_periodic(i)) {
      out.lo[i] = 0.0;
      out.hi[i] = 1.0;
    } else {
      out.lo[i] -= pad;
      out.hi[i] += pad;
    }
  }
  return out;
}

}  // namespace srb
