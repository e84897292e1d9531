#include "sweep/oracles.hpp"
#include "sweep/sweeping.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace sweep;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// C(t) = [t, inf)
SetFamily moving_wall(double T) {
  return SetFamily::translated(ConvexBody::half_space(v1(-1), 0.0),
                               TimePath::linear(Vec::Zero(1), v1(1)), T);
}

// C(t) = B((sin t, 0), 1)
SetFamily moving_disk(double T, double rho = kInf) {
  return SetFamily::translated(ConvexBody::ball(Vec::Zero(2), 1.0),
                               TimePath::sine(Vec::Zero(2), v2(1, 0), 1.0, Vec::Zero(2)), T,
                               rho);
}

}  // namespace

TEST_CASE("catching up: wall pushing") {
  double T = 1.0;
  SetFamily wall = moving_wall(T);
  TimeGrid grid = TimeGrid::uniform(T, 200);
  auto sol = catching_up_solve(wall, v1(0), grid);
  for (std::size_t k = 0; k < grid.t.size(); ++k)
    CHECK(sol.x.x[k][0] == Catch::Approx(grid.t[k]).margin(1e-12));
  CHECK(sol.total_variation() == Catch::Approx(T).margin(1e-12));
  CHECK(sol.K.x.back()[0] == Catch::Approx(T).margin(1e-12));
}

TEST_CASE("catching up matches the 1D Skorokhod oracle") {
  double T = M_PI;
  SetFamily half_line = SetFamily::fixed_convex(ConvexBody::half_space(v1(-1), 0.0), T);
  TimeGrid grid = TimeGrid::uniform(T, 2000);
  TimePath h(1, [](double t) { return Vec::Constant(1, -std::sin(t)); });
  auto sol = catching_up_solve(half_line, h, v1(0), grid);

  std::vector<double> h_nodes;
  for (double t : grid.t) h_nodes.push_back(-std::sin(t));
  auto oracle_x = oracle::skorokhod_1d(h_nodes, 0.0);

  // the reflected path is the shifted state x + h
  double sup = 0;
  for (std::size_t k = 0; k < grid.t.size(); ++k)
    sup = std::max(sup, std::abs(sol.x.x[k][0] + h_nodes[k] - oracle_x[k]));
  CHECK(sup <= 5e-3);
  CHECK(std::abs(sol.x.x.back()[0] + h_nodes.back() - 1.0) <= 5e-3);
}

TEST_CASE("interior start with small movement stays put") {
  SetFamily disk = SetFamily::translated(
      ConvexBody::ball(Vec::Zero(2), 1.0),
      TimePath::sine(Vec::Zero(2), v2(0.01, 0), 1.0, Vec::Zero(2)), 1.0);
  auto sol = catching_up_solve(disk, v2(0, 0), TimeGrid::uniform(1.0, 100));
  CHECK(sol.total_variation() == 0.0);
  CHECK((sol.x.x.back() - v2(0, 0)).norm() == 0.0);
}

TEST_CASE("infeasible start is refused") {
  SetFamily wall = moving_wall(1.0);
  CHECK_THROWS_AS(catching_up_solve(wall, v1(-1), TimeGrid::uniform(1.0, 10)),
                  InfeasibleStartError);
}

TEST_CASE("total variation of discrete paths") {
  TimeGrid g = TimeGrid::uniform(1.0, 2);
  DiscretePath constant{g, {v1(3), v1(3), v1(3)}};
  CHECK(total_variation(constant, 0.0, 1.0) == 0.0);
  DiscretePath linear{g, {v1(0), v1(0.5), v1(1)}};
  CHECK(total_variation(linear, 0.0, 1.0) == Catch::Approx(1.0));
  DiscretePath zigzag{g, {v1(0), v1(1), v1(0)}};
  CHECK(total_variation(zigzag, 0.0, 1.0) == Catch::Approx(2.0));
}

TEST_CASE("variation bound from an interior ball") {
  SECTION("convex case") {
    auto b = variation_bound_interior_ball(v1(1), v1(0), 0.5, kInf);
    REQUIRE(b.has_value());
    CHECK(*b == Catch::Approx(1.0));
  }
  SECTION("x0 at the center") {
    auto b = variation_bound_interior_ball(v1(0), v1(0), 0.5, kInf);
    REQUIRE(b.has_value());
    CHECK(*b == 0.0);
  }
  SECTION("curvature-corrected case") {
    auto b = variation_bound_interior_ball(v1(0.1), v1(0), 0.2, 1.0);
    REQUIRE(b.has_value());
    CHECK(*b == Catch::Approx(0.01 / (2.0 * 0.11)).epsilon(1e-12));
  }
  SECTION("inapplicable when the curvature term eats the radius") {
    auto b = variation_bound_interior_ball(v1(1), v1(0), 0.5, 0.1);
    CHECK_FALSE(b.has_value());
  }
}

TEST_CASE("uniform variation bound") {
  CHECK(uniform_variation_bound(1.0, 0.25, 1.0) == Catch::Approx(2.5));
  CHECK(uniform_variation_bound(2.0, 5.0, 1.0) == Catch::Approx(1.0));  // T < delta
  double b1 = uniform_variation_bound(1.0, 0.3, 1.0);
  double b2 = uniform_variation_bound(1.0, 0.3, 2.0);
  CHECK(b2 <= 2.0 * b1 + 0.5);
}

TEST_CASE("stability constant") {
  CHECK(stability_constant(0.0, 1.0) == 1.0);
  CHECK(stability_constant(1.0, 4.0) == Catch::Approx(8.0 * std::exp(1.0)));
  CHECK(stability_constant(2.0, 1.0) >= stability_constant(1.0, 1.0));
  CHECK(stability_constant(1.0, kInf) == 8.0);  // convex: exp(0) * 8V
}

TEST_CASE("stability check") {
  double T = 1.0;
  SetFamily wall = moving_wall(T);
  TimeGrid grid = TimeGrid::uniform(T, 400);
  SECTION("identical data") {
    TimePath u = TimePath::constant(v1(0.0));
    auto rep = stability_check(wall, u, u, v1(0.5), v1(0.5), grid);
    CHECK(rep.lhs == 0.0);
    CHECK(rep.pass);
  }
  SECTION("small perturbation gap") {
    TimePath u = TimePath::zero(1);
    TimePath v = TimePath::constant(v1(1e-3));
    auto rep = stability_check(wall, u, v, v1(0.5), v1(0.5), grid);
    CHECK(rep.pass);
    CHECK(rep.lhs <= rep.C_empirical * (1e-3 + 1e-6) + 1e-9);
  }
  SECTION("convex contraction beats the bound") {
    SetFamily fixed = SetFamily::fixed_convex(ConvexBody::ball(Vec::Zero(2), 1.0), T);
    auto rep = stability_check(fixed, TimePath(), TimePath(), v2(0.5, 0), v2(-0.5, 0),
                               TimeGrid::uniform(T, 50));
    CHECK(rep.pass);
    CHECK(rep.lhs <= (v2(0.5, 0) - v2(-0.5, 0)).squaredNorm() + 1e-12);
  }
}

TEST_CASE("gronwall bound") {
  SECTION("zero measure") {
    std::vector<double> f(11, 0.5), mu(10, 0.0);
    auto b = gronwall_bound(f, 0.5, mu);
    for (double v : b) CHECK(v == 0.5);
  }
  SECTION("single atom multiplies by e") {
    std::vector<double> f{0.1, 0.1, 0.1}, mu{0.0, 1.0};
    auto b = gronwall_bound(f, 0.1, mu);
    CHECK(b[0] == Catch::Approx(0.1));
    CHECK(b[1] == Catch::Approx(0.1));
    CHECK(b[2] == Catch::Approx(0.1 * std::exp(1.0)));
  }
  SECTION("uniform density matches the exponential") {
    int n = 1000;
    double eps = 0.3;
    std::vector<double> f(n + 1), mu(n, 1.0 / n);
    for (int k = 0; k <= n; ++k) f[k] = eps;  // satisfies the hypothesis trivially
    auto b = gronwall_bound(f, eps, mu);
    for (int k = 0; k <= n; ++k)
      CHECK(b[k] == Catch::Approx(eps * std::exp(double(k) / n)).margin(1e-12));
  }
  SECTION("violated hypothesis throws") {
    std::vector<double> f{0.1, 10.0}, mu{0.0};
    CHECK_THROWS_AS(gronwall_bound(f, 0.1, mu), HypothesisViolatedError);
  }
}

TEST_CASE("solver invariants") {
  double T = 1.0;
  // nonconvex push by a moving excluded ball
  SetFamily comp = SetFamily::complement_of_ball(
      TimePath::linear(v2(-1, 0), v2(1, 0)), 1.0, T);
  TimeGrid grid = TimeGrid::uniform(T, 200);
  auto sol = catching_up_solve(comp, v2(0, 0), grid);

  SECTION("feasibility at every node") {
    for (double r : sol.feas_residual) CHECK(r <= 1e-9);
  }
  SECTION("state is pushed along the axis") {
    CHECK(sol.x.x.back()[0] == Catch::Approx(1.0).margin(1e-9));
    CHECK(sol.total_variation() == Catch::Approx(1.0).margin(1e-9));
  }
  SECTION("discrete normal-cone inclusion") {
    double worst = normal_cone_residual(sol, comp, TimePath(), 64, RngSpec{21, 0});
    CHECK(worst <= 1e-8);
  }
  SECTION("convex case normal-cone inclusion") {
    SetFamily wall = moving_wall(T);
    auto ws = catching_up_solve(wall, v1(0), grid);
    CHECK(normal_cone_residual(ws, wall, TimePath(), 64, RngSpec{22, 0}) <= 1e-8);
  }
}

TEST_CASE("grid refinement is Cauchy") {
  double T = 1.0;
  SetFamily disk = moving_disk(T);
  Vec x0 = v2(0, 1);  // boundary start; lateral motion bends the path
  std::vector<double> gaps;
  TimeGrid grid = TimeGrid::uniform(T, 25);
  auto prev = catching_up_solve(disk, x0, grid);
  for (int level = 0; level < 3; ++level) {
    grid = grid.refined();
    auto next = catching_up_solve(disk, x0, grid);
    double gap = 0;
    std::size_t stride = 1 << (level + 1);
    // compare at the coarse nodes of the base grid
    for (std::size_t k = 0; k < prev.x.x.size(); k += 1) {
      std::size_t j = k * 2;
      gap = std::max(gap, (prev.x.x[k] - next.x.x[j]).norm());
    }
    (void)stride;
    gaps.push_back(gap);
    prev = next;
  }
  CHECK(gaps[1] <= gaps[0] + 1e-12);
  CHECK(gaps[2] <= gaps[1] + 1e-12);
}

TEST_CASE("translation covariance") {
  double T = 1.0;
  SetFamily disk = moving_disk(T);
  TimePath h = TimePath::sine(Vec::Zero(2), v2(0.2, 0.1), 2.0, Vec::Zero(2));
  TimeGrid grid = TimeGrid::uniform(T, 100);
  Vec x0 = v2(0.5, 0);
  auto with_h = catching_up_solve(disk, h, x0, grid);
  auto shifted = catching_up_solve(SetFamily::shifted(disk, h), x0, grid);
  for (std::size_t k = 0; k < grid.t.size(); ++k)
    CHECK((with_h.x.x[k] - shifted.x.x[k]).norm() == 0.0);
}

TEST_CASE("csv serialization") {
  SetFamily wall = moving_wall(0.5);
  auto sol = catching_up_solve(wall, v1(0), TimeGrid::uniform(0.5, 4));
  std::string csv = sol.to_csv();
  CHECK(csv.substr(0, csv.find('\n')) == "t,x_1,K_1,step_var,cum_var,feas_residual");
  // 17 significant digits survive a round trip
  CHECK(csv.find("0.125") != std::string::npos);
  // byte determinism
  CHECK(csv == sol.to_csv());
}
