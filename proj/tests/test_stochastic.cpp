#include "sweep/oracles.hpp"
#include "sweep/stochastic.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace sweep;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

SetFamily half_line(double T) {
  return SetFamily::fixed_convex(ConvexBody::half_space(v1(-1), 0.0), T);
}

SetFamily moving_wall(double T) {
  return SetFamily::translated(ConvexBody::half_space(v1(-1), 0.0),
                               TimePath::linear(Vec::Zero(1), v1(1)), T);
}

}  // namespace

TEST_CASE("noise sampling") {
  TimeGrid grid = TimeGrid::uniform(1.0, 20000);
  RngSpec spec{42, 3};

  SECTION("pure function of (seed, stream, index)") {
    auto a = sample_noise(grid, 2, spec);
    auto b = sample_noise(grid, 2, spec);
    for (std::size_t k = 0; k < a.dB.size(); ++k) CHECK((a.dB[k] - b.dB[k]).norm() == 0.0);
    auto c = sample_noise(grid, 2, RngSpec{42, 4});
    CHECK((a.dB[0] - c.dB[0]).norm() != 0.0);
  }
  SECTION("standardized increments have the right moments") {
    auto p = sample_noise(grid, 1, spec);
    double mean = 0, var = 0;
    for (std::size_t k = 0; k < p.dB.size(); ++k) mean += p.dB[k][0] / std::sqrt(grid.dt(k));
    mean /= double(p.dB.size());
    for (std::size_t k = 0; k < p.dB.size(); ++k) {
      double z = p.dB[k][0] / std::sqrt(grid.dt(k)) - mean;
      var += z * z;
    }
    var /= double(p.dB.size() - 1);
    CHECK(std::abs(mean) <= 3.0 / std::sqrt(double(p.dB.size())));
    CHECK(var == Catch::Approx(1.0).margin(0.05));
  }
}

TEST_CASE("bridge refinement") {
  TimeGrid grid = TimeGrid::uniform(1.0, 256);
  auto parent = sample_noise(grid, 2, RngSpec{7, 0});
  auto child = refine_noise(parent);

  SECTION("children sum to the parent increment") {
    REQUIRE(child.dB.size() == 2 * parent.dB.size());
    for (std::size_t k = 0; k < parent.dB.size(); ++k)
      CHECK((child.dB[2 * k] + child.dB[2 * k + 1] - parent.dB[k]).norm() <= 1e-15);
  }
  SECTION("levels draw from distinct bridge streams") {
    auto grand = refine_noise(child);
    CHECK(grand.level == 2);
    CHECK((grand.dB[0] + grand.dB[1] - child.dB[0]).norm() <= 1e-15);
    CHECK((grand.dB[0] - 0.5 * child.dB[0]).norm() != 0.0);
  }
  SECTION("midpoint conditional variance is dt/4") {
    double dt = grid.dt(0);
    double acc = 0;
    for (std::size_t k = 0; k < parent.dB.size(); ++k) {
      Vec dev = child.dB[2 * k] - 0.5 * parent.dB[k];
      acc += dev.squaredNorm() / 2.0;  // two coordinates
    }
    acc /= double(parent.dB.size());
    CHECK(acc == Catch::Approx(dt / 4.0).epsilon(0.2));
  }
  SECTION("refinement is reproducible") {
    auto again = refine_noise(parent);
    for (std::size_t k = 0; k < child.dB.size(); ++k)
      CHECK((child.dB[k] - again.dB[k]).norm() == 0.0);
  }
}

TEST_CASE("degeneration to the deterministic scheme") {
  double T = 1.0;
  SetFamily wall = moving_wall(T);
  TimeGrid grid = TimeGrid::uniform(T, 200);
  auto noise = sample_noise(grid, 1, RngSpec{11, 0});
  auto stoch = euler_sweeping_solve(wall, SdeCoefficients::zero(1), v1(0), noise);
  auto det = catching_up_solve(wall, v1(0), grid);
  for (std::size_t k = 0; k < grid.t.size(); ++k)
    CHECK((stoch.x.x[k] - det.x.x[k]).norm() == 0.0);
  CHECK(stoch.correction_variation() == Catch::Approx(det.total_variation()).margin(1e-15));
}

TEST_CASE("whole space degeneration: unconstrained Euler, zero correction") {
  double T = 1.0;
  SetFamily full = SetFamily::fixed_convex(ConvexBody::whole_space(2), T);
  auto coeffs = SdeCoefficients::additive(v2(0.3, -0.1), 0.5, 2);
  TimeGrid grid = TimeGrid::uniform(T, 100);
  auto noise = sample_noise(grid, 2, RngSpec{5, 1});
  auto sol = euler_sweeping_solve(full, coeffs, v2(0, 0), noise);
  for (std::size_t k = 0; k < grid.t.size(); ++k) {
    CHECK(sol.z.x[k].norm() == 0.0);
    CHECK((sol.x.x[k] - sol.y.x[k]).norm() == 0.0);
  }
  // the free motion really is the Euler walk
  Vec manual = v2(0, 0);
  for (std::size_t k = 0; k + 1 < grid.t.size(); ++k) {
    manual += v2(0.3, -0.1) * grid.dt(k);
    manual += 0.5 * noise.dB[k];
  }
  CHECK((sol.y.x.back() - manual).norm() <= 1e-14);
  CHECK(sol.correction_variation() == 0.0);
}

TEST_CASE("state splits exactly into free motion plus correction") {
  double T = 1.0;
  SetFamily wall = moving_wall(T);
  auto coeffs = SdeCoefficients::additive(v1(0.2), 0.4, 1);
  auto noise = sample_noise(TimeGrid::uniform(T, 300), 1, RngSpec{9, 2});
  auto sol = euler_sweeping_solve(wall, coeffs, v1(0.5), noise);
  for (std::size_t k = 0; k < sol.x.x.size(); ++k) {
    CHECK((sol.x.x[k] - sol.y.x[k] - sol.z.x[k]).norm() == 0.0);
    CHECK(sol.feas_residual[k] <= 1e-9);
  }
}

TEST_CASE("envelope violation is fatal") {
  SdeCoefficients bad = SdeCoefficients::additive(v1(1.0), 0.0, 1);
  bad.beta_f = [](double) { return 0.5; };  // declared envelope below the actual drift
  auto noise = sample_noise(TimeGrid::uniform(1.0, 10), 1, RngSpec{1, 0});
  CHECK_THROWS_AS(euler_sweeping_solve(half_line(1.0), bad, v1(1), noise),
                  EnvelopeViolatedError);
}

TEST_CASE("monte carlo") {
  double T = 0.25;
  SetFamily line = half_line(T);
  auto coeffs = SdeCoefficients::additive(v1(0.0), 1.0, 1);
  TimeGrid grid = TimeGrid::uniform(T, 50);
  RngSpec rng{2024, 0};

  SECTION("a single path matches the direct solve") {
    auto rep = monte_carlo(line, coeffs, v1(0), grid, 1, rng, {"mean_XT", "sup_feas"});
    auto noise = sample_noise(grid, 1, rng.derive(0));
    auto sol = euler_sweeping_solve(line, coeffs, v1(0), noise);
    CHECK(rep.find("mean_XT")->value[0] == sol.x.x.back()[0]);
    CHECK(rep.find("mean_XT")->std_error[0] == 0.0);
  }
  SECTION("worker count does not change a single statistic bit") {
    std::vector<std::string> stats{"mean_XT", "var_XT", "sup_feas", "mean_corr_var"};
    auto r1 = monte_carlo(line, coeffs, v1(0), grid, 500, rng, stats, 1);
    auto r8 = monte_carlo(line, coeffs, v1(0), grid, 500, rng, stats, 8);
    CHECK(r1.to_json().dump() == r8.to_json().dump());
  }
  SECTION("reflected diffusion moments near the oracle") {
    auto [m_oracle, v_oracle] = oracle::reflected_bm_moments(T);
    auto rep = monte_carlo(line, coeffs, v1(0), grid, 4000, rng, {"mean_XT", "var_XT"});
    // loose window: the discrete reflection has a known O(sqrt(dt)) mean bias
    CHECK(rep.find("mean_XT")->value[0] ==
          Catch::Approx(m_oracle).margin(0.6 * std::sqrt(grid.max_step()) + 0.02));
    CHECK(rep.find("var_XT")->value[0] == Catch::Approx(v_oracle).epsilon(0.15));
  }
  SECTION("unknown statistic is rejected") {
    CHECK_THROWS_AS(monte_carlo(line, coeffs, v1(0), grid, 2, rng, {"median_XT"}),
                    ValidationError);
  }
}

TEST_CASE("pathwise refinement probe") {
  double T = 1.0;
  SetFamily wall = moving_wall(T);
  auto coeffs = SdeCoefficients::additive(v1(-0.2), 0.5, 1);
  // consecutive-level gaps on one path carry realization noise; the base grid
  // and seed are pinned where the order-1/2 trend is visible
  TimeGrid base = TimeGrid::uniform(T, 256);

  auto probe = pathwise_refinement_probe(wall, coeffs, v1(0.5), base, 4, RngSpec{5, 0});
  REQUIRE(probe.sup_distance.size() == 3);
  CHECK(probe.decreasing);
  CHECK(probe.loglog_slope >= 0.4);

  SECTION("a different seed drives a different path") {
    auto other = pathwise_refinement_probe(wall, coeffs, v1(0.5), base, 4, RngSpec{8, 0});
    CHECK(other.sup_distance[0] != probe.sup_distance[0]);
  }
  SECTION("deterministic coefficients reduce to the grid Cauchy test") {
    auto det = pathwise_refinement_probe(wall, SdeCoefficients::zero(1), v1(0.5), base, 3,
                                         RngSpec{1, 0});
    CHECK(det.sup_distance.back() <= det.sup_distance.front() + 1e-15);
  }
}

TEST_CASE("stochastic stability probe") {
  double T = 0.5;
  SetFamily ball = SetFamily::fixed_convex(ConvexBody::ball(Vec::Zero(2), 1.0), T);
  auto coeffs = SdeCoefficients::additive(v2(0.1, 0.0), 0.3, 2);
  auto noise = sample_noise(TimeGrid::uniform(T, 100), 2, RngSpec{31, 0});

  SECTION("identical starts coincide") {
    auto rep = stochastic_stability_probe(ball, coeffs, v2(0.2, 0), v2(0.2, 0), noise);
    CHECK(rep.sup_distance == 0.0);
    CHECK(rep.free_motion_gap == 0.0);
    CHECK(rep.pass);
  }
  SECTION("separated starts stay within the stability envelope") {
    auto rep = stochastic_stability_probe(ball, coeffs, v2(0.5, 0), v2(-0.5, 0), noise);
    CHECK(rep.pass);
    CHECK(rep.sup_distance <= 1.0 + 1e-12);  // convex projections are nonexpansive
  }
}
