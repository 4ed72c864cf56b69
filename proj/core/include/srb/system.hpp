#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "srb/geometry.hpp"
#include "srb/types.hpp"

namespace srb {

struct SplittingField;

/// A C^2 map with derivative, a trapping basin box, and optional analytic
/// extras. Instances are immutable after construction; every operation on
/// them is pure.
struct SystemSpec {
  std::string name;
  int dim = 0;
  int unstable_dim = 1;
  Box basin;

  std::function<Vec(const Vec&)> map_eval;          // one step, wrapped output
  std::function<Mat(const Vec&)> deriv_eval;        // derivative in the universal cover
  std::function<Vec(const Vec&)> known_inverse;     // optional, valid near the attractor
  std::function<SplittingField(const SystemSpec&)> known_splitting;  // optional

  /// Optional extended-precision orbit generator.  Plain doubles are dyadic
  /// rationals, so maps like angle doubling annihilate them in ~52 steps;
  /// systems affected by this register an orbit routine that completes the
  /// seed with a deterministic random tail and iterates exactly.  Residuals
  /// |f(x_k) - x_{k+1}| stay below a few ulp instead of being exactly zero.
  std::function<std::vector<Vec>(const Vec&, int, std::uint64_t)> accurate_orbit;

  std::map<std::string, double> metadata;

  bool has_inverse() const { return static_cast<bool>(known_inverse); }
  bool has_splitting() const { return static_cast<bool>(known_splitting); }

  Vec wrap(const Vec& x) const { return wrap_point(x, basin); }
  Vec diff(const Vec& a, const Vec& b) const { return wrap_diff(a, b, basin); }
  double dist(const Vec& a, const Vec& b) const { return distance(a, b, basin); }
};

/// A splitting field assigns a subspace pair (unstable, center-stable) to
/// each point; bases have orthonormal columns.
struct SplittingField {
  std::function<Mat(const Vec&)> unstable;
  std::function<Mat(const Vec&)> center_stable;
};

struct OrbitSegment {
  std::vector<Vec> points;                 // x_0 .. x_n, exact forward composition
  std::vector<Mat> derivative_frames;      // optional, Df at each point

  int length() const { return static_cast<int>(points.size()); }
  const Vec& front() const { return points.front(); }
  const Vec& back() const { return points.back(); }
};

/// Anchor with preimages x_{-1}, .., x_{-n}.  preimage(k) is x_{-k}.
struct BackwardOrbit {
  Vec anchor;
  std::vector<Vec> preimages;
  std::vector<double> residuals;  // |f(x_{-k}) - x_{-k+1}|

  int depth() const { return static_cast<int>(preimages.size()); }
  const Vec& preimage(int k) const { return preimages.at(static_cast<size_t>(k - 1)); }
  /// Point at signed index -k, with point(0) the anchor.
  const Vec& point(int k) const { return k == 0 ? anchor : preimage(k); }
};

struct HyperbolicityReport {
  double min_unstable_ratio = 0;
  double max_center_stable_ratio = 0;
  Vec worst_unstable_witness;
  Vec worst_center_stable_witness;
  double rate = 0;           // requested lambda_0
  bool uniform_mode = false;
  bool passed = false;
};

OrbitSegment iterate(const SystemSpec& sys, const Vec& x, int n,
                     bool with_derivatives = false);

/// Forward orbit for statistics: uses the system's extended-precision
/// routine when registered, otherwise plain iteration.
std::vector<Vec> long_orbit(const SystemSpec& sys, const Vec& x, int n,
                            std::uint64_t aux_seed);

std::vector<Vec> attractor_sample(const SystemSpec& sys, int seed_count,
                                  int burn_in, std::uint64_t seed);

/// Attractor points together with their exact forward histories, which serve
/// as machine-precision backward orbits.  Deep backward data on the
/// attractor is only reliable from stored histories: re-inverting amplifies
/// rounding by the unstable expansion per step.
struct SampledOrbit {
  Vec point;
  BackwardOrbit history;
};
std::vector<SampledOrbit> attractor_orbits(const SystemSpec& sys, int count,
                                           int burn_in, int history_depth,
                                           std::uint64_t seed);

/// Preimage chain under f restricted to the attractor.  Uses the analytic
/// inverse when the system has one, otherwise damped Newton on f(x)=y seeded
/// from the stored predecessors of the nearest attractor samples.
BackwardOrbit inverse_on_attractor(const SystemSpec& sys, const Vec& y, int depth,
                                   const std::vector<SampledOrbit>* seeds = nullptr,
                                   double tol = 1e-10);

HyperbolicityReport verify_hyperbolicity(const SystemSpec& sys,
                                         const SplittingField& field,
                                         double rate, bool uniform,
                                         const std::vector<Vec>& samples);

/// f^power as a new system (same basin, composed map and derivative).
SystemSpec iterate_system(const SystemSpec& sys, int power);

/// Diagonal linear map on a box [-1,1]^d; no periodic axes.
SystemSpec make_linear_system(const Vec& diagonal);
SystemSpec make_linear_system(const Mat& matrix);

/// Built-in registry.
SystemSpec make_system(const std::string& name);
std::vector<std::string> builtin_system_names();

}  // namespace srb
