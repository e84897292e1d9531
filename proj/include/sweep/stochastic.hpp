#pragma once

#include "sweep/geometry.hpp"
#include "sweep/rng.hpp"
#include "sweep/sweeping.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace sweep {

// ---------------------------------------------------------------------------
// Coefficients with declared envelopes
// ---------------------------------------------------------------------------

struct SdeCoefficients {
  Eigen::Index noise_dim = 1;
  std::function<Vec(double, const Vec&)> f;      // drift, R^d
  std::function<Mat(double, const Vec&)> sigma;  // diffusion, d x noise_dim
  std::function<double(double)> beta_f;          // envelope for ||f(t,.)||
  std::function<double(double)> beta_sigma;      // envelope for ||sigma(t,.)||
  double p = 2.0;                                // integrability exponent of beta_f
  double q = 3.0;                                // integrability exponent of beta_sigma
  std::function<double(double)> lip_f;           // one-sided Lipschitz modulus (optional)
  std::function<double(double)> lip_sigma;       // Lipschitz modulus (optional)

  static SdeCoefficients zero(Eigen::Index d, Eigen::Index ell = 1) {
    SdeCoefficients c;
    c.noise_dim = ell;
    c.f = [d](double, const Vec&) { return Vec::Zero(d).eval(); };
    c.sigma = [d, ell](double, const Vec&) { return Mat::Zero(d, ell).eval(); };
    c.beta_f = [](double) { return 0.0; };
    c.beta_sigma = [](double) { return 0.0; };
    c.lip_f = [](double) { return 0.0; };
    c.lip_sigma = [](double) { return 0.0; };
    return c;
  }

  // constant drift vector and scalar diffusion level on the identity block
  static SdeCoefficients additive(Vec drift, double sigma_level, Eigen::Index ell) {
    Eigen::Index d = drift.size();
    SdeCoefficients c;
    c.noise_dim = ell;
    double fn = drift.norm();
    c.f = [drift](double, const Vec&) { return drift; };
    c.sigma = [d, ell, sigma_level](double, const Vec&) {
      Mat s = Mat::Zero(d, ell);
      for (Eigen::Index i = 0; i < std::min(d, ell); ++i) s(i, i) = sigma_level;
      return s;
    };
    double sn = sigma_level * std::sqrt(double(std::min(d, ell)));
    c.beta_f = [fn](double) { return fn; };
    c.beta_sigma = [sn](double) { return sn; };
    c.lip_f = [](double) { return 0.0; };
    c.lip_sigma = [](double) { return 0.0; };
    return c;
  }

  Vec drift_at(double t, const Vec& x) const {
    Vec v = f(t, x);
    if (beta_f && v.norm() > beta_f(t) + 1e-9)
      throw EnvelopeViolatedError("||f|| = " + std::to_string(v.norm()) +
                                  " exceeds beta_f(t)");
    return v;
  }

  Mat diffusion_at(double t, const Vec& x) const {
    Mat s = sigma(t, x);
    if (beta_sigma && s.norm() > beta_sigma(t) + 1e-9)
      throw EnvelopeViolatedError("||sigma|| exceeds beta_sigma(t)");
    return s;
  }
};

// ---------------------------------------------------------------------------
// Brownian increments with bridge refinement
// ---------------------------------------------------------------------------

struct NoisePath {
  TimeGrid grid;
  std::vector<Vec> dB;  // one increment per step
  RngSpec spec;
  int level = 0;
};

// dB_k ~ N(0, dt_k I_ell), a pure function of (seed, stream, k).
inline NoisePath sample_noise(const TimeGrid& grid, Eigen::Index ell, RngSpec spec) {
  if (ell < 1) throw ValidationError("noise dimension must be >= 1");
  NoisePath p;
  p.grid = grid;
  p.spec = spec;
  p.dB.reserve(grid.steps());
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    double sd = std::sqrt(grid.dt(k));
    Vec v(ell);
    for (Eigen::Index j = 0; j < ell; ++j)
      v[j] = sd * counter_normal(spec, k * std::uint64_t(ell) + std::uint64_t(j));
    p.dB.push_back(std::move(v));
  }
  return p;
}

// Midpoint refinement by Brownian bridge: child increments sum exactly to the
// parent increment; bridge draws come from a stream derived per level.
inline NoisePath refine_noise(const NoisePath& parent) {
  NoisePath child;
  child.grid = parent.grid.refined();
  child.spec = parent.spec;
  child.level = parent.level + 1;
  child.dB.reserve(2 * parent.dB.size());
  RngSpec bridge = parent.spec.derive(1000 + std::uint64_t(child.level));
  Eigen::Index ell = parent.dB.empty() ? 1 : parent.dB[0].size();
  for (std::size_t k = 0; k < parent.dB.size(); ++k) {
    double dt = parent.grid.dt(k);
    Vec xi(ell);
    for (Eigen::Index j = 0; j < ell; ++j)
      xi[j] = counter_normal(bridge, k * std::uint64_t(ell) + std::uint64_t(j));
    // midpoint conditional distribution: mean D/2, variance dt/4
    Vec c1 = 0.5 * parent.dB[k] + 0.5 * std::sqrt(dt) * xi;
    Vec c2 = parent.dB[k] - c1;
    child.dB.push_back(std::move(c1));
    child.dB.push_back(std::move(c2));
  }
  return child;
}

// ---------------------------------------------------------------------------
// Frozen-coefficient projected Euler scheme
// ---------------------------------------------------------------------------

struct StochasticSolution {
  TimeGrid grid;
  DiscretePath x;  // constrained state X
  DiscretePath y;  // free motion Y (coefficients frozen at left nodes)
  DiscretePath z;  // correction Z = X - Y, exactly
  std::vector<double> step_var, cum_var, feas_residual;

  double correction_variation() const { return z.total_variation(); }

  std::string to_csv() const {
    std::ostringstream out;
    Eigen::Index d = x.dim();
    out << "t";
    for (Eigen::Index i = 1; i <= d; ++i) out << ",x_" << i;
    for (Eigen::Index i = 1; i <= d; ++i) out << ",K_" << i;
    out << ",step_var,cum_var,feas_residual";
    for (Eigen::Index i = 1; i <= d; ++i) out << ",y_" << i;
    for (Eigen::Index i = 1; i <= d; ++i) out << ",z_" << i;
    out << '\n';
    for (std::size_t k = 0; k < grid.t.size(); ++k) {
      out << fmt17(grid.t[k]);
      for (Eigen::Index i = 0; i < d; ++i) out << ',' << fmt17(x.x[k][i]);
      for (Eigen::Index i = 0; i < d; ++i) out << ',' << fmt17(z.x[k][i]);
      out << ',' << fmt17(step_var[k]) << ',' << fmt17(cum_var[k]) << ','
          << fmt17(feas_residual[k]);
      for (Eigen::Index i = 0; i < d; ++i) out << ',' << fmt17(y.x[k][i]);
      for (Eigen::Index i = 0; i < d; ++i) out << ',' << fmt17(z.x[k][i]);
      out << '\n';
    }
    return out.str();
  }
};

namespace detail {

// Projection of a free step with bisection of the time interval; the free
// increment is split linearly across sub-steps.
inline Vec stochastic_step(const SetFamily& set, const Vec& x, const Vec& dy, double t_a,
                           double t_b, double gamma, int depth, std::size_t k) {
  try {
    return set.project(t_b, Vec(x + dy), gamma);
  } catch (const OutsideEnlargementError&) {
    if (depth >= 20)
      throw StepTooLargeError("stochastic step " + std::to_string(k) +
                              " needs refinement beyond depth 20");
    double mid = 0.5 * (t_a + t_b);
    Vec half = 0.5 * dy;
    Vec xm = stochastic_step(set, x, half, t_a, mid, gamma, depth + 1, k);
    return stochastic_step(set, xm, half, mid, t_b, gamma, depth + 1, k);
  }
}

}  // namespace detail

// y_{k+1} = y_k + f(t_k, x_k) dt + sigma(t_k, x_k) dB_k
// x_{k+1} = proj_{C(t_{k+1})}(x_k + (y_{k+1} - y_k)),  z = x - y.
inline StochasticSolution euler_sweeping_solve(const SetFamily& set,
                                               const SdeCoefficients& coeffs, const Vec& x0,
                                               const NoisePath& noise, double gamma = 0.5) {
  const TimeGrid& grid = noise.grid;
  if (!grid.valid()) throw ValidationError("invalid time grid");
  if (set.distance(grid.t[0], x0) > tol::feasibility)
    throw InfeasibleStartError("x0 at distance " +
                               std::to_string(set.distance(grid.t[0], x0)) + " from C(0)");

  StochasticSolution sol;
  sol.grid = grid;
  sol.x.grid = sol.y.grid = sol.z.grid = grid;
  sol.x.x.push_back(x0);
  sol.y.x.push_back(x0);
  sol.z.x.push_back(Vec::Zero(x0.size()));
  sol.step_var.assign(1, 0.0);
  sol.cum_var.assign(1, 0.0);
  sol.feas_residual.assign(1, set.distance(grid.t[0], x0));

  bool whole_space_all = true;
  for (std::size_t k = 0; k + 1 < grid.t.size(); ++k) {
    double t = grid.t[k], dt = grid.dt(k);
    const Vec& xk = sol.x.x.back();
    Vec dy = coeffs.drift_at(t, xk) * dt + coeffs.diffusion_at(t, xk) * noise.dB[k];
    Vec y_next = sol.y.x.back() + dy;
    Vec x_next;
    if (set.is_whole_space(grid.t[k + 1]) && whole_space_all) {
      x_next = xk + dy;  // normal cone {0}: projection is the identity
    } else {
      whole_space_all = false;
      x_next = detail::stochastic_step(set, xk, dy, t, grid.t[k + 1], gamma, 0, k);
    }
    double inc = (x_next - xk).norm();
    sol.x.x.push_back(x_next);
    sol.y.x.push_back(y_next);
    sol.z.x.push_back(x_next - y_next);
    sol.step_var.push_back(inc);
    sol.cum_var.push_back(sol.cum_var.back() + inc);
    sol.feas_residual.push_back(set.distance(grid.t[k + 1], x_next));
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Monte Carlo with worker-count-independent determinism
// ---------------------------------------------------------------------------

struct Statistic {
  std::string name;
  std::vector<double> value;  // per coordinate where applicable
  std::vector<double> std_error;
};

struct MonteCarloReport {
  std::vector<Statistic> statistics;
  int n_paths = 0;
  RngSpec rng;

  const Statistic* find(const std::string& name) const {
    for (const auto& s : statistics)
      if (s.name == name) return &s;
    return nullptr;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["n_paths"] = n_paths;
    j["seed"] = rng.seed;
    j["stream"] = rng.stream;
    j["statistics"] = nlohmann::json::array();
    for (const auto& s : statistics)
      j["statistics"].push_back(
          {{"name", s.name}, {"value", s.value}, {"std_error", s.std_error}});
    return j;
  }
};

namespace detail {

// compensated accumulation keeps pooled means independent of summation order
struct Kahan {
  double sum = 0, c = 0;
  void add(double v) {
    double y = v - c;
    double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

}  // namespace detail

// Per-path terminal states and diagnostics, stored by path index so the
// reduction is identical for any worker count.
inline MonteCarloReport monte_carlo(const SetFamily& set, const SdeCoefficients& coeffs,
                                    const Vec& x0, const TimeGrid& grid, int n_paths,
                                    RngSpec rng, const std::vector<std::string>& statistics,
                                    int n_workers = 1, double gamma = 0.5) {
  if (n_paths < 1) throw ValidationError("n_paths must be >= 1");
  Eigen::Index d = x0.size();
  std::vector<Vec> terminal(n_paths);
  std::vector<double> sup_feas(n_paths), corr_var(n_paths);
  std::exception_ptr first_error;
  std::mutex err_mu;

  auto work = [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      try {
        NoisePath noise = sample_noise(grid, coeffs.noise_dim, rng.derive(std::uint64_t(i)));
        StochasticSolution sol = euler_sweeping_solve(set, coeffs, x0, noise, gamma);
        terminal[i] = sol.x.x.back();
        sup_feas[i] = *std::max_element(sol.feas_residual.begin(), sol.feas_residual.end());
        corr_var[i] = sol.correction_variation();
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  if (n_workers <= 1) {
    work(0, n_paths);
  } else {
    std::vector<std::thread> threads;
    int chunk = (n_paths + n_workers - 1) / n_workers;
    for (int w = 0; w < n_workers; ++w) {
      int lo = w * chunk, hi = std::min(n_paths, (w + 1) * chunk);
      if (lo < hi) threads.emplace_back(work, lo, hi);
    }
    for (auto& th : threads) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  MonteCarloReport rep;
  rep.n_paths = n_paths;
  rep.rng = rng;
  double invn = 1.0 / double(n_paths);

  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (Eigen::Index c = 0; c < d; ++c) {
    detail::Kahan m;
    for (int i = 0; i < n_paths; ++i) m.add(terminal[i][c]);
    mean[c] = m.sum * invn;
    detail::Kahan v;
    for (int i = 0; i < n_paths; ++i) {
      double e = terminal[i][c] - mean[c];
      v.add(e * e);
    }
    var[c] = n_paths > 1 ? v.sum / double(n_paths - 1) : 0.0;
  }

  for (const auto& name : statistics) {
    Statistic s;
    s.name = name;
    if (name == "mean_XT") {
      s.value = mean;
      for (Eigen::Index c = 0; c < d; ++c)
        s.std_error.push_back(std::sqrt(var[c] * invn));
    } else if (name == "var_XT") {
      s.value = var;
      for (Eigen::Index c = 0; c < d; ++c) {
        // SE of the sample variance via the fourth central moment
        detail::Kahan m4;
        for (int i = 0; i < n_paths; ++i) {
          double e = terminal[i][c] - mean[c];
          m4.add(e * e * e * e);
        }
        double mu4 = m4.sum * invn;
        s.std_error.push_back(std::sqrt(std::max(0.0, mu4 - var[c] * var[c]) * invn));
      }
    } else if (name == "sup_feas") {
      s.value = {*std::max_element(sup_feas.begin(), sup_feas.end())};
      s.std_error = {0.0};
    } else if (name == "mean_corr_var") {
      detail::Kahan m, v;
      for (int i = 0; i < n_paths; ++i) m.add(corr_var[i]);
      double mval = m.sum * invn;
      for (int i = 0; i < n_paths; ++i) {
        double e = corr_var[i] - mval;
        v.add(e * e);
      }
      s.value = {mval};
      s.std_error = {n_paths > 1 ? std::sqrt(v.sum / double(n_paths - 1) * invn) : 0.0};
    } else {
      throw ValidationError("unknown statistic: " + name);
    }
    rep.statistics.push_back(std::move(s));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Refinement and stability probes
// ---------------------------------------------------------------------------

struct RefinementProbe {
  std::vector<double> sup_distance;  // between consecutive levels
  std::vector<double> dt;            // step of the coarser level in each pair
  double loglog_slope = 0;
  bool decreasing = true;
};

// Solves on grids n, 2n, 4n, ... sharing one Brownian path; compares levels
// at the coarse nodes.
inline RefinementProbe pathwise_refinement_probe(const SetFamily& set,
                                                const SdeCoefficients& coeffs, const Vec& x0,
                                                const TimeGrid& base_grid, int levels,
                                                RngSpec rng, double gamma = 0.5) {
  if (levels < 2) throw ValidationError("need at least two levels");
  RefinementProbe probe;
  NoisePath noise = sample_noise(base_grid, coeffs.noise_dim, rng);
  std::vector<StochasticSolution> sols;
  sols.push_back(euler_sweeping_solve(set, coeffs, x0, noise, gamma));
  for (int l = 1; l < levels; ++l) {
    noise = refine_noise(noise);
    sols.push_back(euler_sweeping_solve(set, coeffs, x0, noise, gamma));
  }
  for (int l = 0; l + 1 < levels; ++l) {
    // nodes of level l appear at even indices of level l+1
    double sup = 0;
    for (std::size_t k = 0; k < sols[l].x.x.size(); ++k)
      sup = std::max(sup, (sols[l].x.x[k] - sols[l + 1].x.x[2 * k]).norm());
    probe.sup_distance.push_back(sup);
    probe.dt.push_back(sols[l].grid.max_step());
    if (probe.sup_distance.size() > 1 &&
        probe.sup_distance.back() >= probe.sup_distance[probe.sup_distance.size() - 2])
      probe.decreasing = false;
  }
  // least-squares slope of log D vs log dt
  std::size_t n = probe.sup_distance.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double lx = std::log(probe.dt[i]), ly = std::log(std::max(probe.sup_distance[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double denom = double(n) * sxx - sx * sx;
  probe.loglog_slope = denom != 0.0 ? (double(n) * sxy - sx * sy) / denom : 0.0;
  return probe;
}

struct StochasticStabilityReport {
  double sup_distance = 0;
  double free_motion_gap = 0;  // realized sup gap of the two free motions
  double rhs = 0;
  double C_empirical = 0;
  bool pass = false;
};

// Two solves differing only in the initial point, driven by the same noise.
inline StochasticStabilityReport stochastic_stability_probe(const SetFamily& set,
                                                            const SdeCoefficients& coeffs,
                                                            const Vec& x0, const Vec& y0,
                                                            const NoisePath& noise,
                                                            double gamma = 0.5) {
  StochasticSolution a = euler_sweeping_solve(set, coeffs, x0, noise, gamma);
  StochasticSolution b = euler_sweeping_solve(set, coeffs, y0, noise, gamma);
  StochasticStabilityReport rep;
  rep.sup_distance = a.x.sup_distance(b.x);
  double gap = 0;
  for (std::size_t k = 0; k < a.y.x.size(); ++k)
    gap = std::max(gap, ((a.y.x[k] - x0) - (b.y.x[k] - y0)).norm());
  rep.free_motion_gap = gap;
  double V = std::max(a.correction_variation(), b.correction_variation());
  rep.C_empirical = stability_constant(V, set.prox_radius());
  rep.rhs = rep.C_empirical * ((x0 - y0).squaredNorm() + gap + gap * gap);
  rep.pass = rep.sup_distance * rep.sup_distance <= rep.rhs + 1e-9;
  return rep;
}

}  // namespace sweep
