#include "srb/builtin_systems.hpp"

#include <cmath>

namespace srb {

namespace {

constexpr double kTau = 2.0 * M_PI;

// Angle factor of the solenoid family: theta -> 2 theta + (warp/2pi) sin(2 pi theta).
struct AngleMap {
  double warp = 0.0;

  double eval(double t) const { return 2.0 * t + warp / kTau * std::sin(kTau * t); }
  double deriv(double t) const { return 2.0 + warp * std::cos(kTau * t); }

  // Branch b in {0,1}: the preimage in [b/2, (b+1)/2) of target in [0,1).
  double preimage(double target, int b) const {
    if (warp == 0.0) return 0.5 * target + 0.5 * b;
    double lo = 0.5 * b, hi = 0.5 * (b + 1);
    double want = target + b;
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 100; ++it) {
      double r = eval(t) - want;
      if (std::abs(r) < 1e-15) break;
      if (r > 0)
        hi = t;
      else
        lo = t;
      double step = r / deriv(t);
      double cand = t - step;
      t = (cand > lo && cand < hi) ? cand : 0.5 * (lo + hi);
    }
    return t;
  }
};

Eigen::Vector2d circle_offset(double t) {
  return {0.5 * std::cos(kTau * t), 0.5 * std::sin(kTau * t)};
}

Eigen::Vector2d circle_offset_deriv(double t) {
  return {-M_PI * std::sin(kTau * t), M_PI * std::cos(kTau * t)};
}

// Binary tape for exact angle doubling.  A double is a dyadic rational, so
// iterating theta -> 2 theta mod 1 on doubles hits 0 after ~52 steps; the
// tape completes the seed with a deterministic random tail (the typical-real
// completion) and doubling becomes an exact offset shift.
class BitTape {
public:
  BitTape(double theta, int nbits, std::mt19937_64& rng) {
    nbits_ = nbits;
    words_.assign(static_cast<size_t>(nbits + 63) / 64 + 2, 0);
    std::uniform_int_distribution<std::uint64_t> word;
    // seed: 53 leading bits from the double, random tail from bit 53 on
    words_[0] = word(rng) & ((1ULL << 11) - 1);
    double frac = theta - std::floor(theta);
    for (int i = 0; i < 53; ++i) {
      frac *= 2.0;
      int bit = frac >= 1.0 ? 1 : 0;
      frac -= bit;
      if (bit) set(i);
    }
    for (size_t w = 1; w < words_.size(); ++w) words_[w] = word(rng);
  }

  double value_at(int offset) const {
    double v = 0, scale = 0.5;
    for (int i = 0; i < 53; ++i) {
      if (get(offset + i)) v += scale;
      scale *= 0.5;
    }
    return v;
  }

private:
  void set(int i) { words_[static_cast<size_t>(i) / 64] |= (1ULL << (63 - i % 64)); }
  bool get(int i) const {
    return (words_[static_cast<size_t>(i) / 64] >> (63 - i % 64)) & 1ULL;
  }
  std::vector<std::uint64_t> words_;
  int nbits_;
};

}  // namespace

SystemSpec make_solenoid(double lambda_c, double warp) {
  SystemSpec sys;
  sys.name = warp == 0.0 ? "solenoid" : "warped-solenoid";
  sys.dim = 3;
  sys.unstable_dim = 1;
  sys.basin.lo = Vec::Zero(3);
  sys.basin.hi = Vec::Ones(3);
  sys.basin.lo[1] = sys.basin.lo[2] = -1.0;
  sys.basin.periodic = {true, false, false};

  const AngleMap g{warp};
  sys.map_eval = [g, lambda_c](const Vec& x) {
    Vec y(3);
    double t = x[0] - std::floor(x[0]);
    y[0] = g.eval(t);
    y[0] -= std::floor(y[0]);
    y.segment<2>(1) = lambda_c * x.segment<2>(1) + circle_offset(t);
    return y;
  };
  sys.deriv_eval = [g, lambda_c](const Vec& x) {
    Mat j = Mat::Zero(3, 3);
    double t = x[0];
    j(0, 0) = g.deriv(t);
    j.block<2, 1>(1, 0) = circle_offset_deriv(t);
    j(1, 1) = j(2, 2) = lambda_c;
    return j;
  };
  // The attractor's fiber sections stay inside |z| <= (1/2)/(1 - lambda_c);
  // the two angular branches produce z-candidates separated by ~1/lambda_c,
  // so at most one candidate can be that small.
  const double fiber_radius = 0.5 / (1.0 - lambda_c);
  sys.known_inverse = [g, lambda_c, fiber_radius](const Vec& y) {
    double target = y[0] - std::floor(y[0]);
    Vec best(3);
    double best_norm = std::numeric_limits<double>::infinity();
    int admissible = 0;
    for (int b = 0; b < 2; ++b) {
      double t = g.preimage(target, b);
      Eigen::Vector2d z = (y.segment<2>(1) - circle_offset(t)) / lambda_c;
      if (z.norm() < 1.5 * fiber_radius) ++admissible;
      if (z.norm() < best_norm) {
        best_norm = z.norm();
        best << t, z[0], z[1];
      }
    }
    if (admissible > 1)
      throw OpError("branch-ambiguous", "both angular branches give admissible fibers");
    return best;
  };
  sys.known_splitting = [g, lambda_c](const SystemSpec& self) {
    SplittingField field;
    // Fiber planes are exactly invariant and contract at rate lambda_c.
    field.center_stable = [](const Vec&) {
      Mat e(3, 2);
      e << 0, 0, 1, 0, 0, 1;
      return e;
    };
    // The unstable line is the fixed section of the backward graph recursion
    //   v(f w) = (B(theta_w) + lambda_c v(w)) / g'(theta_w),
    // summed along the exact backward orbit; 24 terms reach round-off.
    auto inverse = self.known_inverse;
    field.unstable = [g, lambda_c, inverse](const Vec& x) {
      const int depth = 24;
      std::vector<double> angles;
      Vec w = x;
      for (int k = 0; k < depth; ++k) {
        w = inverse(w);
        angles.push_back(w[0]);
      }
      Eigen::Vector2d v = Eigen::Vector2d::Zero();
      for (int k = depth - 1; k >= 0; --k) {
        double t = angles[static_cast<size_t>(k)];
        v = (circle_offset_deriv(t) + lambda_c * v) / g.deriv(t);
      }
      Vec e(3);
      e << 1.0, v[0], v[1];
      return Mat(e / e.norm());
    };
    return field;
  };
  if (warp == 0.0) {
    sys.accurate_orbit = [lambda_c](const Vec& x0, int n, std::uint64_t aux_seed) {
      auto rng = make_rng(aux_seed, 77);
      BitTape tape(x0[0], n + 64, rng);
      std::vector<Vec> orbit;
      orbit.reserve(static_cast<size_t>(n) + 1);
      Vec p(3);
      p << tape.value_at(0), x0[1], x0[2];
      orbit.push_back(p);
      for (int k = 0; k < n; ++k) {
        Eigen::Vector2d z = lambda_c * orbit.back().segment<2>(1) + circle_offset(orbit.back()[0]);
        Vec q(3);
        q << tape.value_at(k + 1), z[0], z[1];
        orbit.push_back(q);
      }
      return orbit;
    };
  }
  sys.metadata["lambda_c"] = lambda_c;
  sys.metadata["warp"] = warp;
  sys.metadata["fiber_radius"] = fiber_radius;
  sys.metadata["contraction_factor"] = lambda_c;
  sys.metadata["min_base_expansion"] = 2.0 - warp;
  if (warp == 0.0) sys.metadata["unstable_exponent"] = std::log(2.0);
  sys.metadata["stable_exponent"] = std::log(lambda_c);
  // One-step expansion on the true unstable line in the ambient norm dips
  // below the block rate; lambda0 is a measured-safe uniform bound while
  // lambda0_block is the skew-block rate (attained in the adapted norm).
  sys.metadata["lambda0"] = warp == 0.0 ? std::log(1.70) : std::log(1.45);
  sys.metadata["lambda0_block"] = std::log(2.0 - warp);
  return sys;
}

SystemSpec make_fat_cat(double c) {
  SystemSpec sys;
  sys.name = "fat-cat";
  sys.dim = 3;
  sys.unstable_dim = 1;
  sys.basin.lo = Vec::Zero(3);
  sys.basin.hi = Vec::Ones(3);
  sys.basin.lo[2] = -0.5;
  sys.basin.hi[2] = 0.5;
  sys.basin.periodic = {true, true, false};

  sys.map_eval = [c](const Vec& x) {
    Vec y(3);
    y[0] = 2.0 * x[0] + x[1];
    y[1] = x[0] + x[1];
    y[0] -= std::floor(y[0]);
    y[1] -= std::floor(y[1]);
    y[2] = c * x[2];
    return y;
  };
  sys.deriv_eval = [c](const Vec&) {
    Mat j(3, 3);
    j << 2, 1, 0, 1, 1, 0, 0, 0, c;
    return j;
  };
  sys.known_inverse = [c](const Vec& y) {
    Vec x(3);
    x[0] = y[0] - y[1];
    x[1] = -y[0] + 2.0 * y[1];
    x[0] -= std::floor(x[0]);
    x[1] -= std::floor(x[1]);
    x[2] = y[2] / c;
    return x;
  };
  const double lam = 0.5 * (3.0 + std::sqrt(5.0));
  sys.known_splitting = [lam](const SystemSpec&) {
    SplittingField field;
    Vec eu(3);
    eu << 1.0, lam - 2.0, 0.0;
    eu.normalize();
    Mat ecs(3, 2);
    Vec es(3);
    es << 1.0, 0.5 * (3.0 - std::sqrt(5.0)) - 2.0, 0.0;  // eigenvector of 1/lam
    es.normalize();
    ecs.col(0) = es;
    ecs.col(1) = Vec::Unit(3, 2);
    field.unstable = [eu](const Vec&) { return Mat(eu); };
    field.center_stable = [ecs](const Vec&) { return ecs; };
    return field;
  };
  sys.metadata["c"] = c;
  sys.metadata["expanding_eigenvalue"] = lam;
  sys.metadata["unstable_exponent"] = std::log(lam);
  sys.metadata["contraction_factor"] = std::max(c, 1.0 / lam);
  sys.metadata["lambda0"] = std::log(lam);
  sys.metadata["lambda0_block"] = std::log(lam);
  return sys;
}

namespace {

// Sine-spectral evaluation tables for the reaction-diffusion truncation.
struct SineGrid {
  int modes;
  int grid;       // interior points x_i = pi i / grid
  Mat synth;      // (grid-1) x modes, sin(k x_i)
  Mat analysis;   // modes x (grid-1), (2/grid) sin(j x_i)

  SineGrid(int n_modes, int n_grid) : modes(n_modes), grid(n_grid) {
    synth.resize(grid - 1, modes);
    analysis.resize(modes, grid - 1);
    for (int i = 1; i < grid; ++i) {
      for (int k = 1; k <= modes; ++k) {
        double s = std::sin(M_PI * k * i / grid);
        synth(i - 1, k - 1) = s;
        analysis(k - 1, i - 1) = 2.0 * s / grid;
      }
    }
  }
};

}  // namespace

SystemSpec make_galerkin_rd(int modes, double lambda, double horizon, double dt) {
  SystemSpec sys;
  sys.name = "galerkin-rd";
  sys.dim = modes;
  sys.unstable_dim = 1;

  // Coefficient caps chosen so the stiff cubic stays inside the RK4
  // stability region at dt; verified by the basin self-map test.
  sys.basin.lo = Vec(modes);
  for (int k = 1; k <= modes; ++k) {
    double cap = k <= 3 ? 5.0 : (k <= 6 ? 1.5 : (k <= 10 ? 0.4 : 0.1));
    sys.basin.lo[k - 1] = -cap;
  }
  sys.basin.hi = -sys.basin.lo;

  auto tables = std::make_shared<SineGrid>(modes, 4 * modes);
  const int steps = static_cast<int>(std::lround(horizon / dt));

  auto rhs = [tables, lambda, modes](const Vec& a) {
    Vec u = tables->synth * a;
    Vec cubic = tables->analysis * Vec(u.array().cube());
    Vec out(modes);
    for (int k = 1; k <= modes; ++k)
      out[k - 1] = (lambda - static_cast<double>(k) * k) * a[k - 1] - cubic[k - 1];
    return out;
  };
  auto rhs_jac = [tables, lambda, modes](const Vec& a) {
    Vec u = tables->synth * a;
    Mat j = -tables->analysis *
            (3.0 * u.array().square()).matrix().asDiagonal() * tables->synth;
    for (int k = 1; k <= modes; ++k)
      j(k - 1, k - 1) += lambda - static_cast<double>(k) * k;
    return j;
  };

  sys.map_eval = [rhs, dt, steps](const Vec& a0) {
    Vec a = a0;
    for (int s = 0; s < steps; ++s) {
      Vec k1 = rhs(a);
      Vec k2 = rhs(a + 0.5 * dt * k1);
      Vec k3 = rhs(a + 0.5 * dt * k2);
      Vec k4 = rhs(a + dt * k3);
      a += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return a;
  };
  // Exact derivative of the RK4-discretized map: the tangent update uses the
  // same stages as the state update.
  sys.deriv_eval = [rhs, rhs_jac, dt, steps, modes](const Vec& a0) {
    Vec a = a0;
    Mat v = Mat::Identity(modes, modes);
    for (int s = 0; s < steps; ++s) {
      Vec k1 = rhs(a);
      Vec s2 = a + 0.5 * dt * k1;
      Vec k2 = rhs(s2);
      Vec s3 = a + 0.5 * dt * k2;
      Vec k3 = rhs(s3);
      Vec s4 = a + dt * k3;
      Vec k4 = rhs(s4);

      Mat m1 = rhs_jac(a) * v;
      Mat m2 = rhs_jac(s2) * (v + 0.5 * dt * m1);
      Mat m3 = rhs_jac(s3) * (v + 0.5 * dt * m2);
      Mat m4 = rhs_jac(s4) * (v + dt * m3);

      a += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      v += dt / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
    }
    return v;
  };
  sys.metadata["lambda"] = lambda;
  sys.metadata["modes"] = modes;
  sys.metadata["horizon"] = horizon;
  sys.metadata["dt"] = dt;
  sys.metadata["contraction_factor"] = 0.95;  // conservative; gradient flow
  sys.metadata["lambda0"] = 0.0;              // no verified uniform hyperbolicity
  return sys;
}

SplittingField axis_splitting(int dim, int du) {
  SplittingField field;
  Mat eu = Mat::Identity(dim, dim).leftCols(du);
  Mat ecs = Mat::Identity(dim, dim).rightCols(dim - du);
  field.unstable = [eu](const Vec&) { return eu; };
  field.center_stable = [ecs](const Vec&) { return ecs; };
  return field;
}

SplittingField analytic_splitting(const SystemSpec& sys) {
  if (!sys.has_splitting())
    throw OpError("no-analytic-splitting", sys.name + " has no registered splitting");
  return sys.known_splitting(sys);
}

SystemSpec make_system(const std::string& name) {
  if (name == "solenoid") return make_solenoid();
  if (name == "warped-solenoid") return make_solenoid(0.25, 0.5);
  if (name == "fat-cat") return make_fat_cat();
  if (name == "galerkin-rd") return make_galerkin_rd();
  throw OpError("unknown-system", name);
}

std::vector<std::string> builtin_system_names() {
  return {"solenoid", "warped-solenoid", "fat-cat", "galerkin-rd"};
}

}  // namespace srb
