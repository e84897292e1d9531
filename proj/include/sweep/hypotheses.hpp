#pragma once

#include "sweep/geometry.hpp"
#include "sweep/modulus.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace sweep {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Constant bundles
// ---------------------------------------------------------------------------

struct H4Constants {
  double r = 0;
  double L = 0;
  // witness direction map (t, x) -> z(t, x)
  std::function<Vec(double, const Vec&)> z;
};

struct H5Constants {
  double delta = 0;
  double L = 0;
  // direction map (t, x) -> unit vector
  std::function<Vec(double, const Vec&)> direction;
};

enum class Verdict { CertifiedByFormula, PassBySampling, FailWithWitness, NotApplicable };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::CertifiedByFormula: return "certified-by-formula";
    case Verdict::PassBySampling: return "pass-by-sampling";
    case Verdict::FailWithWitness: return "fail-with-witness";
    default: return "not-applicable";
  }
}

struct Witness {
  double t = 0;
  Vec x;
  double margin = 0;
  std::string note;
};

struct HypothesisReport {
  std::map<std::string, Verdict> verdicts;
  std::map<std::string, double> constants;  // kappa, ell, r, M, K, epsilon, eta, L_grad, ...
  std::vector<Witness> witnesses;

  bool all_pass() const {
    for (const auto& [k, v] : verdicts)
      if (v == Verdict::FailWithWitness) return false;
    return true;
  }

  Json to_json() const {
    Json j;
    for (const auto& [k, v] : verdicts) j["verdicts"][k] = verdict_name(v);
    for (const auto& [k, v] : constants) j["constants"][k] = v;
    j["witnesses"] = Json::array();
    for (const auto& w : witnesses) {
      Json jw;
      jw["t"] = w.t;
      jw["x"] = std::vector<double>(w.x.data(), w.x.data() + w.x.size());
      jw["margin"] = w.margin;
      if (!w.note.empty()) jw["note"] = w.note;
      j["witnesses"].push_back(jw);
    }
    return j;
  }
};

// ---------------------------------------------------------------------------
// Active sets and the min-norm point in a gradient hull
// ---------------------------------------------------------------------------

// Indices i with -epsilon <= g_i(t,x) <= 0 (feasibility enforced first).
inline std::vector<std::size_t> active_set(const SetFamily& set, double t, const Vec& x,
                                           double epsilon) {
  const auto* gs = set.constraints();
  if (!gs) throw ValidationError("active_set requires a sublevel family");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < gs->size(); ++i) {
    double v = (*gs)[i].value(t, x);
    if (v > tol::feasibility)
      throw InfeasibleError("g_" + std::to_string(i) + " = " + std::to_string(v) + " > 0");
    if (v >= -epsilon) idx.push_back(i);
  }
  return idx;
}

struct MinNormResult {
  double xi = 0;                // -||nearest hull point||
  std::vector<double> lambda;   // simplex coefficients, same length as input
  Vec point;                    // the nearest hull point itself
  double gap = 0;               // duality gap at termination
};

// Wolfe's min-norm-point algorithm over co{v_1, ..., v_m}.
inline MinNormResult min_norm_in_hull(const std::vector<Vec>& v) {
  if (v.empty()) throw EmptySampleError("min_norm_in_hull of empty list");
  std::size_t m = v.size();
  Eigen::Index d = v[0].size();

  // start from the shortest vertex
  std::size_t start = 0;
  for (std::size_t i = 1; i < m; ++i)
    if (v[i].squaredNorm() < v[start].squaredNorm()) start = i;

  std::vector<std::size_t> S{start};
  std::vector<double> w{1.0};
  Vec x = v[start];

  auto affine_min = [&](const std::vector<std::size_t>& idx) {
    // minimize ||sum a_i v_i|| subject to sum a_i = 1
    std::size_t n = idx.size();
    Mat A(n + 1, n + 1);
    Vec b = Vec::Zero(n + 1);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) A(i, j) = v[idx[i]].dot(v[idx[j]]);
    for (std::size_t i = 0; i < n; ++i) {
      A(i, n) = 1.0;
      A(n, i) = 1.0;
    }
    A(n, n) = 0.0;
    b[n] = 1.0;
    Vec sol = A.fullPivLu().solve(b);
    return std::vector<double>(sol.data(), sol.data() + n);
  };

  double gap = kInf;
  for (int major = 0; major < 500; ++major) {
    // optimality: x.x <= min_j x.v_j within the gap tolerance
    double min_dot = kInf;
    std::size_t j_best = 0;
    for (std::size_t j = 0; j < m; ++j) {
      double dj = x.dot(v[j]);
      if (dj < min_dot) {
        min_dot = dj;
        j_best = j;
      }
    }
    gap = x.squaredNorm() - min_dot;
    if (gap <= tol::duality_gap) break;
    if (std::find(S.begin(), S.end(), j_best) == S.end()) {
      S.push_back(j_best);
      w.push_back(0.0);
    }
    // minor cycles: pull back into the relative interior of the face
    for (int minor = 0; minor < 200; ++minor) {
      std::vector<double> a = affine_min(S);
      bool interior = true;
      for (double ai : a)
        if (ai < 1e-12) interior = false;
      if (interior) {
        w = a;
        break;
      }
      double theta = 1.0;
      for (std::size_t i = 0; i < S.size(); ++i)
        if (a[i] < 1e-12 && w[i] > a[i]) theta = std::min(theta, w[i] / (w[i] - a[i]));
      for (std::size_t i = 0; i < S.size(); ++i) w[i] = (1.0 - theta) * w[i] + theta * a[i];
      // drop vanished vertices
      for (std::size_t i = S.size(); i-- > 0;)
        if (w[i] <= 1e-12) {
          S.erase(S.begin() + i);
          w.erase(w.begin() + i);
        }
    }
    x = Vec::Zero(d);
    for (std::size_t i = 0; i < S.size(); ++i) x += w[i] * v[S[i]];
  }

  MinNormResult res;
  res.point = x;
  res.xi = -x.norm();
  res.gap = std::max(0.0, gap);
  res.lambda.assign(m, 0.0);
  for (std::size_t i = 0; i < S.size(); ++i) res.lambda[S[i]] += w[i];
  return res;
}

// ---------------------------------------------------------------------------
// kappa estimation and H4 constant synthesis for sublevel families
// ---------------------------------------------------------------------------

struct KappaEstimate {
  double kappa = -kInf;
  Witness argmax;
  int n_active_points = 0;
  bool negative() const { return kappa < 0; }
};

// Sampled sup of xi(t,x) = -min-norm of the active gradient hull over points
// with nonempty I_epsilon. A nonnegative result is a positive-linear-
//-independence violation witness.
inline KappaEstimate kappa_estimate(const SetFamily& set, double epsilon, int n_time,
                                    int n_space, RngSpec rng_spec) {
  const auto* gs = set.constraints();
  if (!gs) throw ValidationError("kappa_estimate requires a sublevel family");
  KappaEstimate est;
  Rng rng(rng_spec);
  for (int it = 0; it <= n_time; ++it) {
    double t = set.horizon() * double(it) / double(std::max(1, n_time));
    for (int is = 0; is < n_space; ++is) {
      Vec x;
      try {
        x = (is % 2 == 0) ? set.sample_boundary(t, rng) : set.sample_point(t, rng, 400);
      } catch (const Error&) {
        continue;
      }
      std::vector<std::size_t> act;
      try {
        act = active_set(set, t, x, epsilon);
      } catch (const InfeasibleError&) {
        continue;  // boundary bisection can land marginally outside
      }
      if (act.empty()) continue;
      ++est.n_active_points;
      std::vector<Vec> grads;
      grads.reserve(act.size());
      for (auto i : act) grads.push_back((*gs)[i].gradient(t, x));
      double xi = min_norm_in_hull(grads).xi;
      if (xi > est.kappa) {
        est.kappa = xi;
        est.argmax = Witness{t, x, xi, "xi argmax"};
      }
    }
  }
  if (est.n_active_points == 0)
    throw NoActivePointsError("no sampled point had a nonempty I_epsilon");
  return est;
}

struct H4Synthesis {
  double ell = 0, r = 0, M = 0;
  H4Constants constants;
};

// Constant synthesis for sublevel families with kappa < 0:
//   ell = min{1, eta/4, -kappa/(4L), eps/(2K)}
//   r   = min{1, eta/8, -kappa ell/(4(2L+K)), eps/(4K)}
//   M   = ell / r
// with direction z(t,x) = x + ell * v where v is the negated normalized
// min-norm point of the active gradient hull.
inline H4Synthesis h4_constants_sublevel(const SetFamily& set, double kappa, double epsilon,
                                         double eta, double L_grad, double K_bound) {
  if (kappa >= 0) throw NonnegativeKappaError("kappa must be negative");
  if (epsilon <= 0 || eta <= 0 || L_grad <= 0 || K_bound <= 0)
    throw ValidationError("epsilon, eta, L_grad, K_bound must be positive");
  H4Synthesis s;
  s.ell = std::min({1.0, eta / 4.0, -kappa / (4.0 * L_grad), epsilon / (2.0 * K_bound)});
  s.r = std::min({1.0, eta / 8.0, -kappa * s.ell / (4.0 * (2.0 * L_grad + K_bound)),
                  epsilon / (4.0 * K_bound)});
  s.M = s.ell / s.r;
  const auto* gs = set.constraints();
  double ell = s.ell, eps = epsilon;
  s.constants.r = s.r;
  s.constants.L = s.M;
  s.constants.z = [gs, ell, eps, d = set.dim()](double t, const Vec& x) -> Vec {
    std::vector<Vec> grads;
    for (const auto& g : *gs)
      if (g.value(t, x) >= -eps) grads.push_back(g.gradient(t, x));
    if (grads.empty()) return x;  // interior: any direction works
    Vec w = min_norm_in_hull(grads).point;
    double n = w.norm();
    if (n < 1e-14) return x;
    return x + ell * (-w / n);
  };
  return s;
}

// ---------------------------------------------------------------------------
// Sampled hypothesis verification
// ---------------------------------------------------------------------------

struct CheckResult {
  bool pass = true;
  double worst = -kInf;  // worst violation margin (H4) or inner product excess (H5)
  Witness witness;
};

// H4 at (t, x): co({x} U B_{2r}(z(t,x))) inside C(t), and ||z - x|| <= L r.
// Violation margin is the distance of a sampled hull point to C(t).
inline CheckResult verify_H4_at(const SetFamily& set, double t, const Vec& x,
                                const H4Constants& c, int n_samples, RngSpec rng_spec) {
  CheckResult res;
  res.worst = 0;
  Rng rng(rng_spec);
  QuasiRandom qr(set.dim() + 1);
  Vec z = c.z(t, x);
  double reach = (z - x).norm() - c.L * c.r;
  if (reach > 1e-9) {
    res.pass = false;
    res.worst = reach;
    res.witness = Witness{t, z, reach, "||z - x|| exceeds L r"};
  }
  for (int i = 0; i < n_samples; ++i) {
    Vec u = qr.next();
    double lambda = u[set.dim()];
    Vec dir = (2.0 * u.head(set.dim()).array() - 1.0).matrix();
    double dn = dir.norm();
    if (dn < 1e-14) continue;
    double rad = (i % 3 == 0) ? 1.0 : std::pow(rng.uniform(), 1.0 / double(set.dim()));
    Vec zp = z + 2.0 * c.r * rad * (dir / dn);
    if (i % 5 == 0) lambda = (i % 10 == 0) ? 0.0 : 1.0;  // hull endpoints
    Vec p = lambda * x + (1.0 - lambda) * zp;
    if (!set.contains(t, p, tol::feasibility)) {
      double d;
      try {
        d = set.distance(t, p);
      } catch (const NonconvergedProjectionError&) {
        // projection can stall near nonconvex corners; fall back to a
        // first-order lower bound from the violated constraint margins
        d = 0;
        if (const auto* gs = set.constraints()) {
          for (const auto& g : *gs) {
            double v = g.value(t, p);
            double gn = g.gradient(t, p).norm();
            if (v > 0 && gn > 1e-12) d = std::max(d, v / gn);
          }
        }
        if (d == 0) continue;
      }
      if (d > res.worst) {
        res.worst = d;
        res.witness = Witness{t, p, d, "hull point outside the set"};
        res.pass = false;
      }
    }
  }
  if (res.pass) res.worst = 0;
  return res;
}

// H5 at (t, x): for y in B_delta(x) near the boundary, unit proximal normals
// n at y satisfy <n, direction> <= -1/L.
inline CheckResult verify_H5_at(const SetFamily& set, double t, const Vec& x,
                                const H5Constants& c, int n_samples, RngSpec rng_spec) {
  CheckResult res;
  Rng rng(rng_spec);
  Vec ell = c.direction(t, x);
  double bound = -1.0 / c.L;
  int probed = 0;
  res.worst = -kInf;
  for (int i = 0; i < n_samples; ++i) {
    // boundary point of C(t) within B_delta(x): perturb and pull back
    Vec probe = x + c.delta * rng.uniform() * rng.direction(set.dim());
    Vec y;
    try {
      y = set.project(t, probe, 0.9);
    } catch (const Error&) {
      continue;
    }
    if ((y - x).norm() > c.delta) continue;
    Vec n = set.sample_unit_normal(t, y, rng);
    if (n.size() == 0 || n.norm() < 1e-9) continue;
    ++probed;
    double ip = n.dot(ell);
    double excess = ip - bound;
    if (excess > res.worst) {
      res.worst = excess;
      res.witness = Witness{t, y, excess, "support excess over -1/L"};
    }
  }
  if (probed == 0) throw NormalProbeFailedError("no unit normal found near x");
  res.pass = res.worst <= tol::prox_inequality;
  return res;
}

// Prop. 4.3 synthesis: H5 with (delta, L) on a rho-prox-regular family
// implies H4 with the constants below.
struct H5ToH4 {
  double gamma = 0;    // admissible upper bound for r0
  double r0 = 0;       // chosen midpoint gamma/2
  double r_tilde = 0;  // = r0 / (8L)
  double L_tilde = 0;  // = 8L
};

inline H5ToH4 h5_to_h4_constants(double rho, double delta, double L) {
  if (rho <= 0 || delta <= 0 || L <= 0) throw ValidationError("rho, delta, L must be positive");
  double c = 1.0 + 1.0 / (4.0 * L);
  H5ToH4 out;
  out.gamma = std::min({rho / c, delta / (2.0 * c), 3.0 * rho / (8.0 * L * c * c)});
  out.r0 = out.gamma / 2.0;
  out.r_tilde = out.r0 / (8.0 * L);
  out.L_tilde = 8.0 * L;
  return out;
}

// Builds the H4 bundle implied by H5 data: z(t,x) = x + r0 * direction.
inline H4Constants h4_from_h5(const H5ToH4& c, const H5Constants& h5) {
  H4Constants out;
  out.r = c.r_tilde;
  out.L = c.L_tilde;
  double r0 = c.r0;
  auto dir = h5.direction;
  out.z = [r0, dir](double t, const Vec& x) -> Vec { return x + r0 * dir(t, x); };
  return out;
}

// ---------------------------------------------------------------------------
// Complement prox-regularity (Prop. 3.1(ii) route to H4)
// ---------------------------------------------------------------------------

struct ComplementProbeResult {
  ProxProbeResult probe;
  // a pass licenses H4 with these constants
  double r = 0;  // beta / 8
  double L = 4;
};

// Probes the prox-regularity inequality on the closure of the complement.
// Shares the boundary with the set; normals flip sign.
inline ComplementProbeResult check_complement_prox_regular(const SetFamily& set, double t,
                                                           double beta, int n_samples,
                                                           RngSpec rng_spec) {
  ComplementProbeResult out;
  out.r = beta / 8.0;
  Rng rng(rng_spec);
  auto [lo, hi] = set.window(t);
  Vec span = hi - lo;
  Vec wlo = lo - 0.5 * span, whi = hi + 0.5 * span;

  std::vector<Vec> boundary, complement_pts;
  for (int i = 0; i < n_samples && int(boundary.size()) < n_samples; ++i) {
    try {
      boundary.push_back(set.sample_boundary(t, rng));
    } catch (const Error&) {
      break;
    }
  }
  for (int i = 0; i < 50 * n_samples && int(complement_pts.size()) < n_samples; ++i) {
    Vec p = rng.uniform_vec(wlo, whi);
    if (!set.contains(t, p, 0.0)) complement_pts.push_back(p);
  }
  if (complement_pts.empty() && boundary.empty())
    throw EmptyComplementError("complement has no sampled points");

  auto& res = out.probe;
  double inv2beta = inv_or_zero(beta) / 2.0;
  auto record = [&](const Vec& x, const Vec& zeta, const Vec& xp) {
    double margin = zeta.dot(xp - x) - inv2beta * zeta.norm() * (xp - x).squaredNorm();
    if (margin > res.worst_margin) {
      res.worst_margin = margin;
      res.witness_x = x;
      res.witness_xp = xp;
      res.witness_normal = zeta;
      res.witness_t = t;
    }
  };
  for (const auto& x : boundary) {
    Vec n = set.sample_unit_normal(t, x, rng);
    if (n.size() == 0 || n.norm() < 1e-12) continue;
    Vec zeta = -n;  // outward normal of the complement closure
    for (const auto& xp : complement_pts) record(x, zeta, xp);
    for (const auto& xp : boundary) record(x, zeta, xp);
  }
  if (res.worst_margin == -kInf) {
    res.degenerate = true;
    return out;
  }
  res.pass = res.worst_margin <= 1e-7;
  return out;
}

// Interior-ball search for convex families (Prop. 3.1(i) route): find a ball
// B_r(z) inside C(t) by sampled distance-to-boundary maximization.
inline std::pair<Vec, double> interior_ball_search(const SetFamily& set, double t, Rng& rng,
                                                  int n_candidates = 200) {
  Vec best;
  double best_r = -1;
  for (int i = 0; i < n_candidates; ++i) {
    Vec z;
    try {
      z = set.sample_point(t, rng, 200);
    } catch (const Error&) {
      continue;
    }
    // inscribed radius estimate: shortest bisected ray to the boundary
    double r = kInf;
    for (int j = 0; j < 24; ++j) {
      Vec dir = rng.direction(set.dim());
      double lo_s = 0, hi_s = -1;
      auto [wlo, whi] = set.window(t);
      double span = (whi - wlo).norm();
      for (double s = span / 64.0; s <= 2.0 * span; s *= 2.0)
        if (!set.contains(t, z + s * dir, 0.0)) {
          hi_s = s;
          break;
        }
      if (hi_s < 0) continue;  // unbounded ray
      for (int it = 0; it < 50; ++it) {
        double mid = 0.5 * (lo_s + hi_s);
        (set.contains(t, z + mid * dir, 0.0) ? lo_s : hi_s) = mid;
      }
      r = std::min(r, lo_s);
    }
    if (std::isinf(r)) r = 1.0;  // no boundary hit in any direction
    if (r > best_r) {
      best_r = r;
      best = z;
    }
  }
  if (best_r <= 0) throw ProbeFailedError("no interior ball found");
  return {best, best_r};
}

}  // namespace sweep
