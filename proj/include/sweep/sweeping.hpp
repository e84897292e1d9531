#pragma once

#include "sweep/geometry.hpp"
#include "sweep/modulus.hpp"

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace sweep {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Catching-up solution: state path, cumulative correction, variation ledger.
struct SweepingSolution {
  TimeGrid grid;
  DiscretePath x;                     // state, x(t_k) in C(t_k) - h(t_k)
  DiscretePath K;                     // cumulative correction x(t_k) - x0 - free motion
  std::vector<double> step_var;       // increment norm ending at node k (0 at k=0)
  std::vector<double> cum_var;
  std::vector<double> feas_residual;

  double total_variation() const { return cum_var.empty() ? 0.0 : cum_var.back(); }

  std::string to_csv() const {
    std::ostringstream out;
    Eigen::Index d = x.dim();
    out << "t";
    for (Eigen::Index i = 1; i <= d; ++i) out << ",x_" << i;
    for (Eigen::Index i = 1; i <= d; ++i) out << ",K_" << i;
    out << ",step_var,cum_var,feas_residual\n";
    for (std::size_t k = 0; k < grid.t.size(); ++k) {
      out << fmt17(grid.t[k]);
      for (Eigen::Index i = 0; i < d; ++i) out << ',' << fmt17(x.x[k][i]);
      for (Eigen::Index i = 0; i < d; ++i) out << ',' << fmt17(K.x[k][i]);
      out << ',' << fmt17(step_var[k]) << ',' << fmt17(cum_var[k]) << ','
          << fmt17(feas_residual[k]) << '\n';
    }
    return out.str();
  }
};

namespace detail {

// One projection step t_a -> t_b with automatic bisection when the target
// lies outside the single-valued enlargement. Depth cap 20.
inline Vec catching_up_step(const SetFamily& set, const TimePath& h, const Vec& x, double t_a,
                            double t_b, double gamma, int depth, std::size_t k) {
  Vec shifted_x = h.empty() ? x : Vec(x + h(t_b));
  try {
    Vec p = set.project(t_b, shifted_x, gamma);
    return h.empty() ? p : Vec(p - h(t_b));
  } catch (const OutsideEnlargementError&) {
    if (depth >= 20)
      throw StepTooLargeError("step " + std::to_string(k) +
                              " needs refinement beyond depth 20");
    double mid = 0.5 * (t_a + t_b);
    Vec xm = catching_up_step(set, h, x, t_a, mid, gamma, depth + 1, k);
    return catching_up_step(set, h, xm, mid, t_b, gamma, depth + 1, k);
  }
}

}  // namespace detail

// x(t_{k+1}) = proj_{C(t_{k+1}) - h(t_{k+1})}(x(t_k)). An empty h solves the
// unshifted problem.
inline SweepingSolution catching_up_solve(const SetFamily& set, const TimePath& h,
                                          const Vec& x0, const TimeGrid& grid,
                                          double gamma = 0.5) {
  if (!grid.valid()) throw ValidationError("invalid time grid");
  auto dist_shifted = [&](double t, const Vec& p) {
    return h.empty() ? set.distance(t, p) : set.distance(t, Vec(p + h(t)));
  };
  if (dist_shifted(grid.t[0], x0) > tol::feasibility)
    throw InfeasibleStartError("x0 at distance " +
                               std::to_string(dist_shifted(grid.t[0], x0)) + " from C(0)-h(0)");

  SweepingSolution sol;
  sol.grid = grid;
  sol.x.grid = grid;
  sol.K.grid = grid;
  sol.x.x.reserve(grid.t.size());
  sol.K.x.reserve(grid.t.size());
  sol.x.x.push_back(x0);
  sol.K.x.push_back(Vec::Zero(x0.size()));
  sol.step_var.assign(1, 0.0);
  sol.cum_var.assign(1, 0.0);
  sol.feas_residual.assign(1, dist_shifted(grid.t[0], x0));

  for (std::size_t k = 0; k + 1 < grid.t.size(); ++k) {
    Vec next = detail::catching_up_step(set, h, sol.x.x.back(), grid.t[k], grid.t[k + 1],
                                        gamma, 0, k);
    double inc = (next - sol.x.x.back()).norm();
    sol.x.x.push_back(next);
    sol.K.x.push_back(next - x0);
    sol.step_var.push_back(inc);
    sol.cum_var.push_back(sol.cum_var.back() + inc);
    sol.feas_residual.push_back(dist_shifted(grid.t[k + 1], next));
  }
  return sol;
}

inline SweepingSolution catching_up_solve(const SetFamily& set, const Vec& x0,
                                          const TimeGrid& grid, double gamma = 0.5) {
  return catching_up_solve(set, TimePath(), x0, grid, gamma);
}

inline double total_variation(const DiscretePath& path, double a, double b) {
  return path.total_variation(a, b);
}

// Max violation of the discrete normal-cone inclusion: each correction
// increment, viewed as a proximal normal at the new state, must satisfy the
// rho-prox inequality against sampled feasible points.
inline double normal_cone_residual(const SweepingSolution& sol, const SetFamily& set,
                                   const TimePath& h, int n_samples, RngSpec rng_spec) {
  Rng rng(rng_spec);
  double rho = set.prox_radius();
  double worst = 0;
  for (std::size_t k = 0; k + 1 < sol.grid.t.size(); ++k) {
    Vec delta = sol.x.x[k + 1] - sol.x.x[k];  // prediction is the previous state
    double dn = delta.norm();
    if (dn <= 1e-12) continue;
    double t = sol.grid.t[k + 1];
    Vec xk = sol.x.x[k + 1];
    Vec shift = h.empty() ? Vec(Vec::Zero(xk.size())) : h(t);
    for (int s = 0; s < n_samples; ++s) {
      Vec xp;
      try {
        xp = set.sample_point(t, rng, 200) - shift;
      } catch (const Error&) {
        break;
      }
      double lhs = (-delta).dot(xp - xk);
      double rhs = dn / (2.0 * (std::isinf(rho) ? kInf : rho)) * (xp - xk).squaredNorm();
      if (std::isinf(rho)) rhs = 0.0;
      worst = std::max(worst, lhs - rhs);
    }
  }
  return worst;
}

// var(x;[0,T]) <= ||x0-z||^2 / (2(r - d^2/rho)), d = ||x0-z|| + r, valid only
// when d^2/rho < r; returns nullopt otherwise.
inline std::optional<double> variation_bound_interior_ball(const Vec& x0, const Vec& z,
                                                           double r, double rho) {
  double dist = (x0 - z).norm();
  double d = dist + r;
  double curv = inv_or_zero(rho) * d * d;
  if (curv >= r) return std::nullopt;
  return dist * dist / (2.0 * (r - curv));
}

// (rho/2)(floor(T/delta) + 1)
inline double uniform_variation_bound(double rho, double delta, double T) {
  if (delta <= 0) throw ValidationError("delta must be positive");
  return 0.5 * rho * (std::floor(T / delta) + 1.0);
}

// C = exp(4V/rho) max{1, 8V, 4V/rho}
inline double stability_constant(double V, double rho) {
  if (V < 0) throw ValidationError("V must be nonnegative");
  double q = 4.0 * V * inv_or_zero(rho);
  return std::exp(q) * std::max({1.0, 8.0 * V, q});
}

struct StabilityReport {
  double lhs = 0;          // sup-node gap squared
  double rhs = 0;          // empirical C * (||x0-y0||^2 + ||u-v|| + ||u-v||^2)
  double C_empirical = 0;  // from the larger computed variation
  bool pass = false;
};

inline StabilityReport stability_check(const SetFamily& set, const TimePath& u,
                                       const TimePath& v, const Vec& x0, const Vec& y0,
                                       const TimeGrid& grid, double gamma = 0.5) {
  SweepingSolution su = catching_up_solve(set, u, x0, grid, gamma);
  SweepingSolution sv = catching_up_solve(set, v, y0, grid, gamma);
  StabilityReport rep;
  double gap = su.x.sup_distance(sv.x);
  rep.lhs = gap * gap;
  double uv = u.empty() && v.empty() ? 0.0
              : TimePath(u.empty() ? TimePath::zero(x0.size()) : u)
                    .sup_norm_diff(v.empty() ? TimePath::zero(x0.size()) : v, grid);
  double V = std::max(su.total_variation(), sv.total_variation());
  rep.C_empirical = stability_constant(V, set.prox_radius());
  rep.rhs = rep.C_empirical * ((x0 - y0).squaredNorm() + uv + uv * uv);
  rep.pass = rep.lhs <= rep.rhs + 1e-9;
  return rep;
}

// Discrete Gronwall: given samples f_k on the grid and step weights mu_k
// (mass of mu on [t_k, t_{k+1}[), verifies the integral hypothesis
// f_k <= eps + sum_{j<k} f_j mu_j and returns the bound eps exp(sum_{j<k} mu_j).
inline std::vector<double> gronwall_bound(const std::vector<double>& f, double eps,
                                          const std::vector<double>& mu) {
  if (mu.size() + 1 != f.size()) throw ValidationError("mu must have one weight per step");
  std::vector<double> bound(f.size());
  double integral = 0, mass = 0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (f[k] < 0 || f[k] > eps + integral + 1e-12)
      throw HypothesisViolatedError("f exceeds eps + integral at node " + std::to_string(k));
    bound[k] = eps * std::exp(mass);
    if (k < mu.size()) {
      integral += f[k] * mu[k];
      mass += mu[k];
    }
  }
  return bound;
}

}  // namespace sweep
