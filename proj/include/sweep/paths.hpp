#pragma once

#include "sweep/common.hpp"

#include <algorithm>
#include <functional>
#include <utility>
#include <vector>

namespace sweep {

// Partition 0 = t_0 < t_1 < ... < t_n = T.
struct TimeGrid {
  std::vector<double> t;

  static TimeGrid uniform(double T, std::size_t n) {
    TimeGrid g;
    g.t.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) g.t[k] = T * double(k) / double(n);
    g.t.back() = T;
    return g;
  }

  std::size_t steps() const { return t.size() - 1; }
  double horizon() const { return t.back(); }
  double dt(std::size_t k) const { return t[k + 1] - t[k]; }
  double max_step() const {
    double m = 0;
    for (std::size_t k = 0; k + 1 < t.size(); ++k) m = std::max(m, dt(k));
    return m;
  }

  bool valid() const {
    if (t.size() < 2 || t.front() != 0.0) return false;
    for (std::size_t k = 0; k + 1 < t.size(); ++k)
      if (t[k + 1] <= t[k]) return false;
    return true;
  }

  // Midpoint refinement, doubling the number of steps.
  TimeGrid refined() const {
    TimeGrid g;
    g.t.reserve(2 * t.size() - 1);
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
      g.t.push_back(t[k]);
      g.t.push_back(0.5 * (t[k] + t[k + 1]));
    }
    g.t.push_back(t.back());
    return g;
  }
};

// Grid plus values in R^d, with total-variation accounting.
struct DiscretePath {
  TimeGrid grid;
  std::vector<Vec> x;

  Eigen::Index dim() const { return x.empty() ? 0 : x.front().size(); }

  double total_variation() const { return total_variation(grid.t.front(), grid.t.back()); }

  // Sum of increment norms over [a,b]; a,b must be grid-aligned.
  double total_variation(double a, double b) const {
    double v = 0;
    for (std::size_t k = 0; k + 1 < x.size(); ++k)
      if (grid.t[k] >= a - 1e-15 && grid.t[k + 1] <= b + 1e-15) v += (x[k + 1] - x[k]).norm();
    return v;
  }

  double sup_distance(const DiscretePath& other) const {
    double m = 0;
    for (std::size_t k = 0; k < x.size(); ++k) m = std::max(m, (x[k] - other.x[k]).norm());
    return m;
  }

  // Value at grid node nearest to time t (paths are grid-sampled objects).
  const Vec& at_node(std::size_t k) const { return x[k]; }
};

// Continuous time path t -> R^d, used for set centers and perturbations h.
class TimePath {
 public:
  TimePath() = default;
  TimePath(Eigen::Index d, std::function<Vec(double)> f) : dim_(d), f_(std::move(f)) {}

  static TimePath zero(Eigen::Index d) {
    return TimePath(d, [d](double) { return Vec::Zero(d); });
  }
  static TimePath constant(const Vec& v) {
    return TimePath(v.size(), [v](double) { return v; });
  }
  static TimePath linear(const Vec& v0, const Vec& v1) {
    return TimePath(v0.size(), [v0, v1](double t) -> Vec { return v0 + t * v1; });
  }
  // base + amp .* sin(omega t + phase)
  static TimePath sine(const Vec& base, const Vec& amp, double omega, const Vec& phase) {
    return TimePath(base.size(), [base, amp, omega, phase](double t) -> Vec {
      Vec v = base;
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += amp[i] * std::sin(omega * t + phase[i]);
      return v;
    });
  }

  Vec operator()(double t) const { return f_ ? f_(t) : Vec(); }
  Eigen::Index dim() const { return dim_; }
  bool empty() const { return !f_; }

  DiscretePath sample(const TimeGrid& grid) const {
    DiscretePath p;
    p.grid = grid;
    p.x.reserve(grid.t.size());
    for (double t : grid.t) p.x.push_back((*this)(t));
    return p;
  }

  double sup_norm_diff(const TimePath& other, const TimeGrid& grid) const {
    double m = 0;
    for (double t : grid.t) m = std::max(m, ((*this)(t) - other(t)).norm());
    return m;
  }

 private:
  Eigen::Index dim_ = 0;
  std::function<Vec(double)> f_;
};

}  // namespace sweep
