#pragma once

#include <vector>

#include "srb/system.hpp"

namespace srb {

/// Lyapunov exponents with multiplicities, strictly decreasing.
struct LyapunovSpectrum {
  struct Entry {
    double exponent;
    int multiplicity;
  };
  std::vector<Entry> entries;

  int total_multiplicity() const;
  double top() const { return entries.front().exponent; }
  /// Sum of positive exponents counted with multiplicity.
  double positive_sum() const;
};

/// Pointwise splitting data: orthonormal bases for the unstable and
/// center-stable factors plus the associated oblique projections.
struct Splitting {
  Mat unstable;             // d x du, orthonormal columns
  Mat center_stable;        // d x (d-du), orthonormal columns
  Mat proj_unstable;        // projection onto E^u along E^cs
  Mat proj_center_stable;   // complement, proj_u + proj_cs = I
  Mat center;               // optional E^c block; empty for the built-ins
  double convergence_gap = 0;  // certificate from the defining iteration

  static Splitting from_bases(const Mat& eu, const Mat& ecs);
};

/// Inner product adapted to the splitting at a point: expansion and
/// contraction become one-step at the requested rate.
struct AdaptedNorm {
  Mat gram;                  // positive definite, d x d
  double distortion = 1;     // upper frame bound vs the ambient norm
  double tail_ratio = 0;     // last-term weight of the defining series

  double norm(const Vec& v) const;
};

/// QR-cocycle estimate of the Lyapunov spectrum along the orbit of x.
/// Exponents closer than cluster_tol merge into one multiplicity.
LyapunovSpectrum lyapunov_spectrum(const SystemSpec& sys, const Vec& x, int n,
                                   int reorth_every = 1, double cluster_tol = 0.02);

/// Unstable subspace at the anchor of a backward orbit: push a frame forward
/// from the deepest preimage, re-orthonormalizing.  The convergence
/// certificate compares against the frame obtained from depth-5 less data.
Splitting unstable_subspace(const SystemSpec& sys, const BackwardOrbit& bwd, int du,
                            std::uint64_t seed = 7, double gap_tol = 1e-9);

/// Center-stable subspace at x from the adjoint cocycle along the forward
/// orbit: the expanding coframe is pulled back and its complement returned.
Splitting stable_subspace(const SystemSpec& sys, const Vec& x, int n, int du,
                          std::uint64_t seed = 7, double gap_tol = 1e-9);

/// Gap metric between subspaces spanned by the columns of e and f:
/// max over both unit spheres of the distance to the other sphere.
double kato_gap(const Mat& e, const Mat& f);

struct HolderReport {
  double empirical_exponent = 0;   // infinity when the field is constant
  double predicted_lower_bound = 0;
  double lambda1 = 0, lambda2 = 0; // measured rates entering the bound
  double log_a = 0;                // measured norm/Lipschitz constant
  int pairs_used = 0;
  bool constant_field = false;
  bool passed = false;
};

/// Log-log fit of subspace gap against point distance over nearby attractor
/// pairs, compared with the lower bound from the measured rates.
HolderReport holder_exponent_estimate(const SystemSpec& sys, char which, int n_pairs,
                                      std::uint64_t seed, double fit_slack = 0.05);

/// Lyapunov inner product at x from truncated forward/backward series, with
/// the one-step bounds checked on random vectors (slack margin e^{-2 delta0}).
AdaptedNorm lyapunov_norm(const SystemSpec& sys, const SampledOrbit& at, double lambda,
                          double delta0, int horizon, std::uint64_t seed = 11);

}  // namespace srb
