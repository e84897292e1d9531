#pragma once

#include "sweep/geometry.hpp"

#include <vector>

namespace sweep {

// Sampled envelope of r -> sup{ d_H(C(t),C(s)) : |t-s| <= r }.
class ContinuityModulus {
 public:
  ContinuityModulus() = default;
  // table of (r, value) pairs; made nondecreasing by a running max
  explicit ContinuityModulus(std::vector<std::pair<double, double>> table)
      : table_(std::move(table)) {
    std::sort(table_.begin(), table_.end());
    double run = 0;
    for (auto& [r, v] : table_) {
      run = std::max(run, v);
      v = run;
    }
    if (table_.empty() || table_.front().first > 0.0)
      table_.insert(table_.begin(), {0.0, 0.0});
    table_.front().second = 0.0;
  }

  // piecewise-linear evaluation, clamped to the last tabulated value
  double operator()(double r) const {
    if (r <= 0.0) return 0.0;
    if (r >= table_.back().first) return table_.back().second;
    auto it = std::upper_bound(table_.begin(), table_.end(), std::make_pair(r, kInf));
    auto [r1, v1] = *it;
    auto [r0, v0] = *(it - 1);
    double w = (r - r0) / (r1 - r0);
    return v0 + w * (v1 - v0);
  }

  // generalized inverse: inf{ r >= 0 : P(r) >= x }; infinity when x is never
  // reached within the tabulated horizon
  double inverse(double x) const {
    if (x <= 0.0) return 0.0;
    if (table_.back().second < x) return kInf;
    for (std::size_t i = 1; i < table_.size(); ++i) {
      auto [r1, v1] = table_[i];
      if (v1 >= x) {
        auto [r0, v0] = table_[i - 1];
        if (v1 == v0) return r0;
        return r0 + (x - v0) / (v1 - v0) * (r1 - r0);
      }
    }
    return kInf;
  }

  double max_r() const { return table_.empty() ? 0.0 : table_.back().first; }
  const std::vector<std::pair<double, double>>& table() const { return table_; }

 private:
  std::vector<std::pair<double, double>> table_;
};

// Tabulates the modulus on a ladder of n_time window widths, using the
// variant's closed-form Hausdorff step when available and sampled estimates
// otherwise.
inline ContinuityModulus modulus_of_continuity(const SetFamily& set, int n_time,
                                               int n_space, RngSpec rng_spec = {}) {
  double T = set.horizon();
  std::vector<double> times(n_time + 1);
  for (int i = 0; i <= n_time; ++i) times[i] = T * double(i) / double(n_time);

  Rng rng(rng_spec);
  auto dh = [&](double t, double s) {
    if (auto cf = set.hausdorff_step(t, s)) return *cf;
    return hausdorff_distance(set, t, set, s, n_space, rng).value;
  };

  // gaps on a uniform ladder align with index lags: P(r_k) is the running
  // max of the per-lag maxima up to lag k
  std::vector<double> lag_max(n_time + 1, 0.0);
  for (int lag = 1; lag <= n_time; ++lag)
    for (std::size_t i = 0; i + lag < times.size(); ++i)
      lag_max[lag] = std::max(lag_max[lag], dh(times[i], times[i + lag]));

  std::vector<std::pair<double, double>> table;
  table.reserve(n_time + 1);
  double run = 0;
  for (int k = 0; k <= n_time; ++k) {
    run = std::max(run, lag_max[k]);
    table.emplace_back(T * double(k) / double(n_time), run);
  }
  return ContinuityModulus(std::move(table));
}

// Time half-width during which the ball B_{r/2}(x_bar) stays inside C(t).
// Checks B_r(x_bar) subset of C(t_bar) by quasi-random sampling first.
inline double ball_persistence(const SetFamily& set, double t_bar, const Vec& x_bar, double r,
                               const ContinuityModulus& modulus, int n_samples = 512) {
  QuasiRandom qr(set.dim());
  Rng rng(RngSpec{7, 7});
  for (int i = 0; i < n_samples; ++i) {
    Vec u = qr.next();
    Vec p = x_bar + r * (2.0 * u.array() - 1.0).matrix().normalized() *
                        std::pow(rng.uniform(), 1.0 / double(set.dim()));
    if (i % 4 == 0) p = x_bar + r * rng.direction(set.dim());  // spherical shell
    if (!set.contains(t_bar, p))
      throw BallNotContainedError("B_r(x_bar) not contained in C(t_bar)");
  }
  double target = std::min(r / 2.0, set.prox_radius() / 2.0);
  double delta = modulus.inverse(target);
  delta = std::min(delta, set.horizon());
  // spot-check the guaranteed half-ball inclusion at a few times
  for (int j = -4; j <= 4; ++j) {
    double t = t_bar + delta * 0.99 * double(j) / 4.0;
    t = std::clamp(t, 0.0, set.horizon());
    for (int i = 0; i < 32; ++i) {
      Vec p = x_bar + 0.5 * r * rng.direction(set.dim()) * rng.uniform();
      if (!set.contains(t, p, 1e-7))
        throw BallNotContainedError("half-ball persistence spot check failed");
    }
  }
  return delta;
}

// Sampled check of the uniform prox-regularity inequality
// <zeta, x'-x> <= (||zeta||/(2 rho)) ||x'-x||^2.
struct ProxProbeResult {
  bool pass = true;
  bool degenerate = false;  // no boundary found; vacuous pass
  double worst_margin = -kInf;
  Vec witness_x, witness_xp, witness_normal;
  double witness_t = 0;
};

inline ProxProbeResult prox_regularity_probe(const SetFamily& set, double t,
                                             double rho_candidate, int n_samples,
                                             RngSpec rng_spec) {
  ProxProbeResult res;
  Rng rng(rng_spec);
  std::vector<Vec> boundary;
  for (int i = 0; i < n_samples; ++i) {
    try {
      boundary.push_back(set.sample_boundary(t, rng));
    } catch (const Error&) {
      break;
    }
  }
  if (boundary.empty()) {
    res.degenerate = true;
    return res;
  }
  double inv2rho = inv_or_zero(rho_candidate) / 2.0;
  auto record = [&](const Vec& x, const Vec& zeta, const Vec& xp) {
    double margin = zeta.dot(xp - x) - inv2rho * zeta.norm() * (xp - x).squaredNorm();
    if (margin > res.worst_margin) {
      res.worst_margin = margin;
      res.witness_x = x;
      res.witness_xp = xp;
      res.witness_normal = zeta;
      res.witness_t = t;
    }
  };
  for (const auto& x : boundary) {
    Vec zeta = set.sample_unit_normal(t, x, rng);
    if (zeta.size() == 0 || zeta.norm() < 1e-12) continue;
    // interior draws plus the other boundary points as adversarial candidates
    for (int j = 0; j < 8; ++j) {
      try {
        record(x, zeta, set.sample_point(t, rng, 200));
      } catch (const Error&) {
        break;
      }
    }
    for (const auto& xp : boundary) record(x, zeta, xp);
  }
  if (res.worst_margin == -kInf) {
    res.degenerate = true;
    return res;
  }
  res.pass = res.worst_margin <= 1e-7;
  return res;
}

}  // namespace sweep
