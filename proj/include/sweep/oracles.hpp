#pragma once

// Reference implementations kept deliberately independent of the main
// numerical code: plain std::vector arithmetic, no Eigen, no shared solver
// kernels. Slow brute force is the point.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sweep::oracle {

struct Result {
  std::vector<double> value;
  std::string method;       // closed-form | grid | simplex-enumeration
  double resolution = 0;
  double error_bound = 0;   // certified where the method admits one
};

// Exact reflected path for C = [0, inf):
// X_k = h_k + x0 + max(0, max_{j<=k} -(h_j + x0)).
inline std::vector<double> skorokhod_1d(const std::vector<double>& h, double x0) {
  std::vector<double> x(h.size());
  double running = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    double free_val = h[k] + x0;
    if (-free_val > running) running = -free_val;
    x[k] = free_val + running;
  }
  return x;
}

// Exhaustive grid search for the nearest feasible point in B_radius(x).
// Certified error grid_step * sqrt(d). Cost guard d <= 3.
inline Result brute_force_project(
    const std::function<bool(const std::vector<double>&)>& feasible,
    const std::vector<double>& x, double grid_step, double radius) {
  std::size_t d = x.size();
  if (d == 0 || d > 3) throw std::invalid_argument("brute_force_project supports 1 <= d <= 3");
  long n = long(std::floor(radius / grid_step));
  std::vector<long> idx(d, -n);
  std::vector<double> best;
  double best_d2 = 0.0;
  bool found = false;
  for (;;) {
    std::vector<double> p(d);
    for (std::size_t i = 0; i < d; ++i) p[i] = x[i] + double(idx[i]) * grid_step;
    if (feasible(p)) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < d; ++i) d2 += (p[i] - x[i]) * (p[i] - x[i]);
      if (!found || d2 < best_d2) {
        best = p;
        best_d2 = d2;
        found = true;
      }
    }
    // odometer
    std::size_t i = 0;
    while (i < d && ++idx[i] > n) idx[i++] = -n;
    if (i == d) break;
  }
  if (!found) throw std::runtime_error("NoFeasibleGridPoint: no feasible grid point in ball");
  Result r;
  r.value = best;
  r.method = "grid";
  r.resolution = grid_step;
  r.error_bound = grid_step * std::sqrt(double(d));
  return r;
}

// Law of |B_t|: mean sqrt(2t/pi), variance t(1 - 2/pi).
inline std::pair<double, double> reflected_bm_moments(double t) {
  if (t <= 0) throw std::invalid_argument("t must be positive");
  const double pi = 3.14159265358979323846;
  return {std::sqrt(2.0 * t / pi), t * (1.0 - 2.0 / pi)};
}

// Enumerates simplex weights at the given resolution and returns the negated
// minimal hull-point norm. Error bound resolution * max ||v_i||.
inline Result simplex_min_norm_grid(const std::vector<std::vector<double>>& v,
                                    double resolution) {
  std::size_t m = v.size();
  if (m == 0 || m > 4) throw std::invalid_argument("simplex_min_norm_grid supports 1 <= m <= 4");
  std::size_t d = v[0].size();
  long steps = long(std::llround(1.0 / resolution));
  double vmax = 0.0;
  for (const auto& vi : v) {
    double n2 = 0.0;
    for (double c : vi) n2 += c * c;
    vmax = std::max(vmax, std::sqrt(n2));
  }

  double best = -1.0;
  std::vector<long> lam(m, 0);
  std::function<void(std::size_t, long)> rec = [&](std::size_t i, long remaining) {
    if (i + 1 == m) {
      lam[i] = remaining;
      double n2 = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += double(lam[j]) / double(steps) * v[j][c];
        n2 += s * s;
      }
      double n = std::sqrt(n2);
      if (best < 0.0 || n < best) best = n;
      return;
    }
    for (long k = 0; k <= remaining; ++k) {
      lam[i] = k;
      rec(i + 1, remaining - k);
    }
  };
  rec(0, steps);

  Result r;
  r.value = {-best};
  r.method = "simplex-enumeration";
  r.resolution = resolution;
  r.error_bound = resolution * vmax;
  return r;
}

}  // namespace sweep::oracle
