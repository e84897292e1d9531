// Acceptance gate: one line per criterion, nonzero exit if any fail.
// Usage: acceptance <sweep-cli-binary> <scenarios-dir>

#include "sweep/hypotheses.hpp"
#include "sweep/oracles.hpp"
#include "sweep/scenario.hpp"
#include "sweep/stochastic.hpp"

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

using namespace sweep;

namespace {

std::string g_cli, g_scenarios, g_outroot;

Vec v1(double a) { return Vec::Constant(1, a); }

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

int run_cli(const std::string& args) {
  std::string cmd = g_cli + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

struct Criterion {
  int id;
  std::string title;
  std::function<bool(std::string&)> run;
};

// 1. 1D Skorokhod oracle match
bool c1(std::string& note) {
  double T = M_PI;
  SetFamily line = SetFamily::fixed_convex(ConvexBody::half_space(v1(-1), 0.0), T);
  std::size_t n = std::size_t(std::ceil(T / 1e-4));
  TimeGrid grid = TimeGrid::uniform(T, n);
  TimePath h(1, [](double t) { return Vec::Constant(1, -std::sin(t)); });
  auto sol = catching_up_solve(line, h, v1(0), grid);
  std::vector<double> hs;
  hs.reserve(grid.t.size());
  for (double t : grid.t) hs.push_back(-std::sin(t));
  auto oracle_x = oracle::skorokhod_1d(hs, 0.0);
  double sup = 0;
  for (std::size_t k = 0; k < grid.t.size(); ++k)
    sup = std::max(sup, std::abs(sol.x.x[k][0] + hs[k] - oracle_x[k]));
  note = "sup error " + std::to_string(sup);
  return sup <= 5e-3;
}

// 2. Projection Lipschitz constant on the enlargement
bool c2(std::string& note) {
  SetFamily comp =
      SetFamily::complement_of_ball(TimePath::constant(v2(0, 0)), 1.0, 1.0);
  Rng rng(RngSpec{101, 0});
  double max_ratio = 0;
  auto draw = [&]() {
    Vec dir = rng.direction(2);
    double r = 0.5 + 1e-6 + (0.5 - 2e-6) * rng.uniform();  // distance to C in (0, 0.5)
    return Vec(r * dir);
  };
  for (int i = 0; i < 10000; ++i) {
    Vec u = draw(), v = draw();
    double duv = (u - v).norm();
    if (duv < 1e-12) continue;
    Vec pu = comp.project(0.0, u, 0.5);
    Vec pv = comp.project(0.0, v, 0.5);
    max_ratio = std::max(max_ratio, (pu - pv).norm() / duv);
  }
  note = "max ratio " + std::to_string(max_ratio);
  return max_ratio <= 2.0 + 1e-6;
}

// 3. Prox-regularity probe calibration
bool c3(std::string& note) {
  SetFamily comp =
      SetFamily::complement_of_ball(TimePath::constant(v2(0, 0)), 1.0, 1.0);
  auto good = prox_regularity_probe(comp, 0.0, 1.0, 2000, RngSpec{5, 0});
  auto bad = prox_regularity_probe(comp, 0.0, 2.0, 2000, RngSpec{5, 0});
  bool witness_ok = !bad.pass && bad.witness_x.size() == 2 && bad.worst_margin > 1e-7;
  if (witness_ok) {
    // replay the witness arithmetic
    double margin = bad.witness_normal.dot(bad.witness_xp - bad.witness_x) -
                    bad.witness_normal.norm() / 4.0 *
                        (bad.witness_xp - bad.witness_x).squaredNorm();
    witness_ok = std::abs(margin - bad.worst_margin) <= 1e-12;
  }
  note = "rho=1 margin " + std::to_string(good.worst_margin) + ", rho=2 margin " +
         std::to_string(bad.worst_margin);
  return good.pass && witness_ok;
}

// 4. Min-norm-in-hull vs simplex grid oracle
bool c4(std::string& note) {
  Rng rng(RngSpec{7, 3});
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    int d = 1 + int(rng.index(3));
    int m = 1 + int(rng.index(4));
    std::vector<Vec> vs;
    std::vector<std::vector<double>> raw;
    for (int j = 0; j < m; ++j) {
      Vec v(d);
      for (int c = 0; c < d; ++c) v[c] = 2.0 * rng.uniform() - 1.0;
      vs.push_back(v);
      raw.emplace_back(v.data(), v.data() + d);
    }
    auto lib = min_norm_in_hull(vs);
    auto ref = oracle::simplex_min_norm_grid(raw, 0.01);
    double err = std::abs(lib.xi - ref.value[0]);
    if (err > ref.error_bound + 1e-6) {
      note = "set " + std::to_string(i) + " off by " + std::to_string(err);
      return false;
    }
    worst = std::max(worst, err - ref.error_bound);
  }
  note = "worst excess over oracle bound " + std::to_string(worst);
  return true;
}

// 5. H4 constant synthesis on the sublevel quadrant
bool c5(std::string& note) {
  std::vector<ConstraintFn> gs{ConstraintFn::affine(v2(-1, 0), 0.0),
                               ConstraintFn::affine(v2(0, -1), 0.0)};
  SetFamily q = SetFamily::sublevel(std::move(gs), SublevelMeta{0.1, 1.0, 1.0, 1.0}, 1.0,
                                    kInf, v2(-0.5, -0.5), v2(2, 2));
  auto kap = kappa_estimate(q, 0.1, 8, 400, RngSpec{1, 0});
  if (!kap.negative()) {
    note = "kappa not negative";
    return false;
  }
  auto syn = h4_constants_sublevel(q, kap.kappa, 0.1, 1.0, 1.0, 1.0);
  Rng rng(RngSpec{2, 0});
  double worst = -kInf;
  for (int b = 0; b < 1000; ++b) {
    double t = rng.uniform();
    Vec x;
    try {
      x = q.sample_boundary(t, rng);
    } catch (const Error&) {
      continue;
    }
    auto res = verify_H4_at(q, t, x, syn.constants, 1000, RngSpec{100 + std::uint64_t(b), 0});
    worst = std::max(worst, res.worst);
    if (res.worst > 1e-9) {
      note = "violation " + std::to_string(res.worst) + " at boundary point " +
             std::to_string(b);
      return false;
    }
  }
  note = "ell " + std::to_string(syn.ell) + ", r " + std::to_string(syn.r) +
         ", worst violation " + std::to_string(worst);
  return true;
}

// 6. Figure 1 corner fails H4 and H5 through the CLI
bool c6(std::string& note) {
  int code = run_cli("check " + g_scenarios + "/figure1_corner.json");
  if (code != 4) {
    note = "expected exit 4, got " + std::to_string(code);
    return false;
  }
  Json rep = Json::parse(slurp(g_outroot + "/out/figure1_corner/report.json"));
  bool ok = rep.at("verdicts").at("H4") == "fail-with-witness" &&
            rep.at("verdicts").at("H5") == "fail-with-witness" &&
            !rep.at("witnesses").empty();
  note = ok ? "exit 4 with corner witness" : "report lacks the expected witness";
  return ok;
}

// 7. Uniform variation bound on the moving disk
bool c7(std::string& note) {
  double T = M_PI;
  SetFamily disk = SetFamily::translated(
      ConvexBody::ball(Vec::Zero(2), 1.0),
      TimePath::sine(Vec::Zero(2), v2(1, 0), 1.0, Vec::Zero(2)), T, 1.0);
  auto modulus = modulus_of_continuity(disk, 256, 0, RngSpec{3, 0});
  double delta = ball_persistence(disk, 0.0, v2(0, 0), 0.9, modulus);
  double bound = uniform_variation_bound(disk.prox_radius(), delta, T);
  TimeGrid grid = TimeGrid::uniform(T, 1000);
  Rng rng(RngSpec{17, 0});
  double worst_tv = 0;
  for (int i = 0; i < 10; ++i) {
    Vec x0 = disk.sample_point(0.0, rng, 200);
    auto sol = catching_up_solve(disk, x0, grid);
    worst_tv = std::max(worst_tv, sol.total_variation());
    if (sol.total_variation() > bound) {
      note = "variation " + std::to_string(sol.total_variation()) + " exceeds bound " +
             std::to_string(bound);
      return false;
    }
  }
  note = "delta " + std::to_string(delta) + ", bound " + std::to_string(bound) +
         ", worst variation " + std::to_string(worst_tv);
  return true;
}

// 8. Stability estimate across perturbation pairs
bool c8(std::string& note) {
  SetFamily wall = SetFamily::translated(ConvexBody::half_space(v1(-1), 0.0),
                                         TimePath::linear(Vec::Zero(1), v1(1)), 1.0);
  TimeGrid grid = TimeGrid::uniform(1.0, 500);
  Rng rng(RngSpec{23, 0});
  double worst_slack = kInf;
  for (int i = 0; i < 100; ++i) {
    double a = 0.05 * rng.uniform();
    double gap = std::pow(10.0, -4.0 + 3.0 * rng.uniform());  // [1e-4, 1e-1]
    TimePath u = TimePath::constant(v1(a));
    TimePath v = TimePath::constant(v1(a + gap));
    auto rep = stability_check(wall, u, v, v1(0.5), v1(0.5), grid);
    worst_slack = std::min(worst_slack, rep.rhs - rep.lhs);
    if (!rep.pass) {
      note = "pair " + std::to_string(i) + " violates: lhs " + std::to_string(rep.lhs) +
             " rhs " + std::to_string(rep.rhs);
      return false;
    }
  }
  note = "100 pairs, min slack " + std::to_string(worst_slack);
  return true;
}

// 9. Reflected Brownian motion terminal law
bool c9(std::string& note) {
  SetFamily line = SetFamily::fixed_convex(ConvexBody::half_space(v1(-1), 0.0), 1.0);
  auto coeffs = SdeCoefficients::additive(v1(0.0), 1.0, 1);
  TimeGrid grid = TimeGrid::uniform(1.0, 1000);
  auto rep = monte_carlo(line, coeffs, v1(0), grid, 100000, RngSpec{42, 0},
                         {"mean_XT", "var_XT"}, 8);
  auto [m0, v0] = oracle::reflected_bm_moments(1.0);
  const auto* m = rep.find("mean_XT");
  const auto* v = rep.find("var_XT");
  bool mean_ok = std::abs(m->value[0] - m0) <= 3.0 * m->std_error[0];
  bool var_ok = std::abs(v->value[0] - v0) <= 3.0 * v->std_error[0];
  std::ostringstream os;
  os << "mean " << m->value[0] << " vs " << m0 << " (3SE " << 3.0 * m->std_error[0]
     << (mean_ok ? ", ok" : ", off") << "), var " << v->value[0] << " vs " << v0 << " (3SE "
     << 3.0 * v->std_error[0] << (var_ok ? ", ok" : ", off") << ")";
  note = os.str();
  return mean_ok && var_ok;
}

// 10. Pathwise refinement on the moving interval
bool c10(std::string& note) {
  SetFamily wall = SetFamily::translated(ConvexBody::half_space(v1(-1), 0.0),
                                         TimePath::linear(Vec::Zero(1), v1(1)), 1.0);
  auto coeffs = SdeCoefficients::additive(v1(-0.2), 0.5, 1);
  auto probe = pathwise_refinement_probe(wall, coeffs, v1(0.5), TimeGrid::uniform(1.0, 256),
                                         4, RngSpec{5, 0});
  std::ostringstream os;
  os << "distances";
  for (double d : probe.sup_distance) os << " " << d;
  os << ", slope " << probe.loglog_slope;
  note = os.str();
  return probe.decreasing && probe.loglog_slope >= 0.4;
}

// 11. Degeneration identities, exact equality
bool c11(std::string& note) {
  SetFamily wall = SetFamily::translated(ConvexBody::half_space(v1(-1), 0.0),
                                         TimePath::linear(Vec::Zero(1), v1(1)), 1.0);
  TimeGrid grid = TimeGrid::uniform(1.0, 200);
  auto noise = sample_noise(grid, 1, RngSpec{11, 0});
  auto stoch = euler_sweeping_solve(wall, SdeCoefficients::zero(1), v1(0), noise);
  auto det = catching_up_solve(wall, v1(0), grid);
  for (std::size_t k = 0; k < grid.t.size(); ++k)
    if ((stoch.x.x[k] - det.x.x[k]).norm() != 0.0) {
      note = "zero-coefficient solve differs at node " + std::to_string(k);
      return false;
    }

  SetFamily full = SetFamily::fixed_convex(ConvexBody::whole_space(2), 1.0);
  auto coeffs = SdeCoefficients::additive(v2(0.3, -0.1), 0.5, 2);
  auto noise2 = sample_noise(grid, 2, RngSpec{12, 0});
  auto free = euler_sweeping_solve(full, coeffs, v2(0, 0), noise2);
  for (const auto& z : free.z.x)
    if (z.norm() != 0.0) {
      note = "whole-space correction is nonzero";
      return false;
    }

  SetFamily ball = SetFamily::fixed_convex(ConvexBody::ball(Vec::Zero(2), 1.0), 1.0);
  auto rest = catching_up_solve(ball, v2(0.2, 0.1), grid);
  if (rest.total_variation() != 0.0) {
    note = "constant set produced variation";
    return false;
  }
  note = "all three identities exact";
  return true;
}

// 12. Byte-identical CSVs under 1 and 8 workers
bool c12(std::string& note) {
  Json cfg = Json::parse(slurp(g_scenarios + "/fixed_half_line.json"));
  for (int workers : {1, 8}) {
    cfg["workers"] = workers;
    cfg["output_dir"] = "out/det_w" + std::to_string(workers);
    std::string path = g_outroot + "/cfg_w" + std::to_string(workers) + ".json";
    std::ofstream(path) << cfg.dump(2);
    int code = run_cli("run " + path);
    if (code != 0) {
      note = "workers=" + std::to_string(workers) + " exited " + std::to_string(code);
      return false;
    }
  }
  for (int i = 0; i < cfg.at("n_paths").get<int>(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "path_%04d.csv", i);
    std::string a = slurp(g_outroot + "/out/det_w1/" + name);
    std::string b = slurp(g_outroot + "/out/det_w8/" + name);
    if (a.empty() || a != b) {
      note = std::string(name) + " differs between worker counts";
      return false;
    }
  }
  if (slurp(g_outroot + "/out/det_w1/report.json") !=
      slurp(g_outroot + "/out/det_w8/report.json")) {
    note = "report.json differs between worker counts";
    return false;
  }
  note = "8 path CSVs and reports byte-identical";
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance <sweep-cli> <scenarios-dir>\n");
    return 2;
  }
  g_cli = argv[1];
  g_scenarios = argv[2];
  const char* root = std::getenv("SWEEP_OUTPUT_ROOT");
  g_outroot = root ? root : "/tmp/sweep_acceptance";
  ::setenv("SWEEP_OUTPUT_ROOT", g_outroot.c_str(), 1);
  fs::create_directories(g_outroot);

  std::vector<Criterion> criteria{
      {1, "1D Skorokhod oracle match", c1},
      {2, "projection Lipschitz constant on the enlargement", c2},
      {3, "prox-regularity probe calibration", c3},
      {4, "min-norm-in-hull vs simplex grid oracle", c4},
      {5, "H4 constant synthesis on the sublevel quadrant", c5},
      {6, "corner counterexample fails H4/H5 via CLI", c6},
      {7, "uniform variation bound on the moving disk", c7},
      {8, "stability estimate across perturbation pairs", c8},
      {9, "reflected Brownian motion terminal law", c9},
      {10, "pathwise refinement convergence", c10},
      {11, "degeneration identities", c11},
      {12, "worker-count determinism of CSV artifacts", c12},
  };

  int failures = 0;
  for (auto& c : criteria) {
    std::string note;
    bool ok = false;
    try {
      ok = c.run(note);
    } catch (const std::exception& e) {
      note = std::string("exception: ") + e.what();
    }
    if (!ok) ++failures;
    std::printf("[%s] criterion %2d: %s (%s)\n", ok ? "pass" : "FAIL", c.id, c.title.c_str(),
                note.c_str());
    std::fflush(stdout);
  }
  if (failures) std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
