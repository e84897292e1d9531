#pragma once

#include "sweep/common.hpp"
#include "sweep/paths.hpp"
#include "sweep/rng.hpp"

#include <algorithm>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace sweep {

// ---------------------------------------------------------------------------
// Convex primitives with closed-form projections
// ---------------------------------------------------------------------------

struct HalfSpacePrim {  // a.x <= b, ||a|| = 1 after construction
  Vec a;
  double b;
  HalfSpacePrim(Vec a_, double b_) : a(std::move(a_)), b(b_) {
    double n = a.norm();
    a /= n;
    b /= n;
  }
  double margin(const Vec& x) const { return a.dot(x) - b; }
  Vec project(const Vec& x) const {
    double m = margin(x);
    return m <= 0 ? x : Vec(x - m * a);
  }
};

struct BallPrim {  // ||x - c|| <= r
  Vec c;
  double r;
  double margin(const Vec& x) const { return (x - c).norm() - r; }
  Vec project(const Vec& x) const {
    Vec u = x - c;
    double n = u.norm();
    return n <= r ? x : Vec(c + (r / n) * u);
  }
};

struct BoxPrim {  // lo <= x <= hi componentwise
  Vec lo, hi;
  double margin(const Vec& x) const {
    double m = -kInf;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      m = std::max({m, lo[i] - x[i], x[i] - hi[i]});
    return m;
  }
  Vec project(const Vec& x) const {
    Vec y = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) y[i] = std::clamp(x[i], lo[i], hi[i]);
    return y;
  }
};

// Intersection of convex primitives. Projection is closed-form for a single
// primitive and Dykstra's algorithm otherwise.
class ConvexBody {
 public:
  ConvexBody() = default;
  explicit ConvexBody(Eigen::Index d) : dim_(d) {}

  static ConvexBody half_space(Vec a, double b) {
    ConvexBody c(a.size());
    c.half_spaces_.emplace_back(std::move(a), b);
    return c;
  }
  static ConvexBody ball(Vec center, double r) {
    ConvexBody c(center.size());
    c.balls_.push_back({std::move(center), r});
    return c;
  }
  static ConvexBody box(Vec lo, Vec hi) {
    ConvexBody c(lo.size());
    c.boxes_.push_back({std::move(lo), std::move(hi)});
    return c;
  }
  static ConvexBody whole_space(Eigen::Index d) { return ConvexBody(d); }

  ConvexBody& add_half_space(Vec a, double b) {
    half_spaces_.emplace_back(std::move(a), b);
    return *this;
  }
  ConvexBody& add_ball(Vec center, double r) {
    balls_.push_back({std::move(center), r});
    return *this;
  }
  ConvexBody& add_box(Vec lo, Vec hi) {
    boxes_.push_back({std::move(lo), std::move(hi)});
    return *this;
  }

  Eigen::Index dim() const { return dim_; }
  std::size_t primitive_count() const {
    return half_spaces_.size() + balls_.size() + boxes_.size();
  }
  const std::vector<HalfSpacePrim>& half_spaces() const { return half_spaces_; }
  const std::vector<BallPrim>& balls() const { return balls_; }
  const std::vector<BoxPrim>& boxes() const { return boxes_; }

  // max over primitives of the (metric for half spaces/balls) violation
  double margin(const Vec& x) const {
    double m = primitive_count() == 0 ? -kInf : -kInf;
    for (const auto& h : half_spaces_) m = std::max(m, h.margin(x));
    for (const auto& b : balls_) m = std::max(m, b.margin(x));
    for (const auto& b : boxes_) m = std::max(m, b.margin(x));
    return m;
  }

  bool contains(const Vec& x, double tol) const { return margin(x) <= tol; }

  Vec project(const Vec& x) const {
    if (primitive_count() == 0) return x;
    if (primitive_count() == 1) return project_single(x);
    return dykstra(x);
  }

  // Axis-aligned window enclosing the set where it is bounded; otherwise a
  // default window of half-width `fallback` around the origin.
  std::pair<Vec, Vec> window(double fallback = 8.0) const {
    Vec lo = Vec::Constant(dim_, -fallback), hi = Vec::Constant(dim_, fallback);
    for (const auto& b : balls_) {
      for (Eigen::Index i = 0; i < dim_; ++i) {
        lo[i] = std::max(lo[i], b.c[i] - b.r);
        hi[i] = std::min(hi[i], b.c[i] + b.r);
      }
    }
    for (const auto& b : boxes_) {
      for (Eigen::Index i = 0; i < dim_; ++i) {
        lo[i] = std::max(lo[i], b.lo[i]);
        hi[i] = std::min(hi[i], b.hi[i]);
      }
    }
    return {lo, hi};
  }

 private:
  Vec project_single(const Vec& x) const {
    if (!half_spaces_.empty()) return half_spaces_[0].project(x);
    if (!balls_.empty()) return balls_[0].project(x);
    return boxes_[0].project(x);
  }

  Vec dykstra(const Vec& x) const {
    std::size_t m = primitive_count();
    std::vector<Vec> corr(m, Vec::Zero(dim_));
    Vec y = x;
    for (int iter = 0; iter < 2000; ++iter) {
      Vec prev = y;
      std::size_t idx = 0;
      for (const auto& h : half_spaces_) step(y, corr[idx++], [&](const Vec& v) { return h.project(v); });
      for (const auto& b : balls_) step(y, corr[idx++], [&](const Vec& v) { return b.project(v); });
      for (const auto& b : boxes_) step(y, corr[idx++], [&](const Vec& v) { return b.project(v); });
      if ((y - prev).norm() <= 1e-14 && margin(y) <= 1e-12) return y;
    }
    if (margin(y) <= 1e-9) return y;
    throw NonconvergedProjectionError("Dykstra projection failed to converge");
  }

  template <class P>
  static void step(Vec& y, Vec& corr, P&& proj) {
    Vec z = y + corr;
    Vec p = proj(z);
    corr = z - p;
    y = p;
  }

  Eigen::Index dim_ = 0;
  std::vector<HalfSpacePrim> half_spaces_;
  std::vector<BallPrim> balls_;
  std::vector<BoxPrim> boxes_;
};

// ---------------------------------------------------------------------------
// Constraint catalog for sublevel-set families
// ---------------------------------------------------------------------------

// Smooth constraint g(t,x) with gradient and Hessian in x, picked from a
// registered catalog so scenarios can reference them by name.
class ConstraintFn {
 public:
  // g = a.x - (b0 + b1 t)
  static ConstraintFn affine(Vec a, double b0, double b1 = 0.0) {
    ConstraintFn f;
    f.name_ = "affine";
    Eigen::Index d = a.size();
    f.value_ = [a, b0, b1](double t, const Vec& x) { return a.dot(x) - b0 - b1 * t; };
    f.grad_ = [a](double, const Vec&) { return a; };
    f.hess_ = [d](double, const Vec&) { return Mat::Zero(d, d).eval(); };
    f.grad_bound_ = a.norm();
    f.grad_lipschitz_ = 0.0;
    return f;
  }

  // g = ||x - c(t)||^2 - r^2
  static ConstraintFn ball(TimePath center, double r) {
    ConstraintFn f;
    f.name_ = "ball";
    Eigen::Index d = center.dim();
    f.value_ = [center, r](double t, const Vec& x) { return (x - center(t)).squaredNorm() - r * r; };
    f.grad_ = [center](double t, const Vec& x) { return Vec(2.0 * (x - center(t))); };
    f.hess_ = [d](double, const Vec&) { return Mat(2.0 * Mat::Identity(d, d)); };
    f.grad_lipschitz_ = 2.0;
    return f;
  }

  // g = r^2 - ||x - c(t)||^2  (complement of an open ball)
  static ConstraintFn antiball(TimePath center, double r) {
    ConstraintFn f;
    f.name_ = "antiball";
    Eigen::Index d = center.dim();
    f.value_ = [center, r](double t, const Vec& x) { return r * r - (x - center(t)).squaredNorm(); };
    f.grad_ = [center](double t, const Vec& x) { return Vec(-2.0 * (x - center(t))); };
    f.hess_ = [d](double, const Vec&) { return Mat(-2.0 * Mat::Identity(d, d)); };
    f.grad_lipschitz_ = 2.0;
    return f;
  }

  // g = 0.5 x.Qx + a.x + b with diagonal Q
  static ConstraintFn quadratic(Vec q_diag, Vec a, double b) {
    ConstraintFn f;
    f.name_ = "quadratic";
    f.value_ = [q_diag, a, b](double, const Vec& x) {
      return 0.5 * x.dot(q_diag.cwiseProduct(x)) + a.dot(x) + b;
    };
    f.grad_ = [q_diag, a](double, const Vec& x) { return Vec(q_diag.cwiseProduct(x) + a); };
    f.hess_ = [q_diag](double, const Vec&) { return Mat(q_diag.asDiagonal()); };
    f.grad_lipschitz_ = q_diag.cwiseAbs().maxCoeff();
    return f;
  }

  // g = sum_i ((x_i - m_i)/w_i)^(2p) - 1, a smooth box
  static ConstraintFn smooth_box(Vec mid, Vec half_width, int p) {
    ConstraintFn f;
    f.name_ = "smoothbox";
    f.value_ = [mid, half_width, p](double, const Vec& x) {
      double s = -1.0;
      for (Eigen::Index i = 0; i < x.size(); ++i)
        s += std::pow((x[i] - mid[i]) / half_width[i], 2 * p);
      return s;
    };
    f.grad_ = [mid, half_width, p](double, const Vec& x) {
      Vec g(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        double u = (x[i] - mid[i]) / half_width[i];
        g[i] = 2.0 * p * std::pow(u, 2 * p - 1) / half_width[i];
      }
      return g;
    };
    f.hess_ = [mid, half_width, p](double, const Vec& x) {
      Mat h = Mat::Zero(x.size(), x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        double u = (x[i] - mid[i]) / half_width[i];
        h(i, i) = 2.0 * p * (2 * p - 1) * std::pow(u, 2 * p - 2) / (half_width[i] * half_width[i]);
      }
      return h;
    };
    return f;
  }

  double value(double t, const Vec& x) const { return value_(t, x); }
  Vec gradient(double t, const Vec& x) const { return grad_(t, x); }
  Mat hessian(double t, const Vec& x) const { return hess_(t, x); }
  const std::string& name() const { return name_; }
  std::optional<double> grad_bound() const { return grad_bound_; }
  std::optional<double> grad_lipschitz() const { return grad_lipschitz_; }

 private:
  std::string name_;
  std::function<double(double, const Vec&)> value_;
  std::function<Vec(double, const Vec&)> grad_;
  std::function<Mat(double, const Vec&)> hess_;
  std::optional<double> grad_bound_;
  std::optional<double> grad_lipschitz_;
};

struct SublevelMeta {
  double epsilon = 0.1;        // active-set margin
  double eta = 0.1;            // enlargement where gradients stay Lipschitz
  double grad_lipschitz = 1.0; // L on C(t) + eta B
  double grad_bound = 0.0;     // K; 0 means "estimate by sampling"
};

// ---------------------------------------------------------------------------
// SetFamily: time-indexed constraint set C(t)
// ---------------------------------------------------------------------------

namespace detail {

class SetVariant {
 public:
  virtual ~SetVariant() = default;
  virtual Eigen::Index dim() const = 0;
  virtual bool contains(double t, const Vec& x, double tol) const = 0;
  // distance + projection; gamma_rho is the enlargement radius gamma*rho
  virtual Vec project(double t, const Vec& x, double gamma_rho) const = 0;
  virtual double distance(double t, const Vec& x) const = 0;
  // single representative of the unit proximal normal cone; zero if none
  virtual Vec unit_normal(double t, const Vec& x) const = 0;
  // random unit element of the cone approximation
  virtual Vec sample_unit_normal(double t, const Vec& x, Rng& rng) const {
    return unit_normal(t, x);
  }
  virtual std::optional<Vec> boundary_sample_closed_form(double t, Rng&) const {
    (void)t;
    return std::nullopt;
  }
  virtual std::pair<Vec, Vec> window(double t) const = 0;
  // closed-form d_H(C(t), C(s)) when the variant admits one
  virtual std::optional<double> hausdorff_step(double t, double s) const { return std::nullopt; }
  virtual bool is_whole_space(double) const { return false; }
};

}  // namespace detail

class SetFamily {
 public:
  SetFamily() = default;

  static SetFamily fixed_convex(ConvexBody body, double horizon, double rho = kInf);
  static SetFamily translated(ConvexBody base, TimePath center, double horizon,
                              double rho = kInf);
  static SetFamily complement_of_ball(TimePath center, double radius, double horizon);
  static SetFamily sublevel(std::vector<ConstraintFn> constraints, SublevelMeta meta,
                            double horizon, double rho, Vec window_lo, Vec window_hi);
  static SetFamily shifted(SetFamily inner, TimePath offset);

  Eigen::Index dim() const { return variant_->dim(); }
  double prox_radius() const { return rho_; }
  double horizon() const { return horizon_; }

  bool contains(double t, const Vec& x, double tol = tol::membership) const {
    check_time(t);
    return variant_->contains(t, x, tol);
  }

  double distance(double t, const Vec& x) const {
    check_time(t);
    return variant_->distance(t, x);
  }

  // Metric projection; refuses when x lies outside the gamma*rho enlargement,
  // where single-valuedness is not guaranteed.
  Vec project(double t, const Vec& x, double gamma = 0.5) const {
    check_time(t);
    if (gamma <= 0.0 || gamma >= 1.0) throw ValidationError("gamma must lie in (0,1)");
    double enlargement = std::isinf(rho_) ? kInf : gamma * rho_;
    return variant_->project(t, x, enlargement);
  }

  Vec proximal_unit_normal(double t, const Vec& x) const {
    check_time(t);
    return variant_->unit_normal(t, x);
  }

  Vec sample_unit_normal(double t, const Vec& x, Rng& rng) const {
    check_time(t);
    return variant_->sample_unit_normal(t, x, rng);
  }

  // A point of bd C(t), generated from closed forms where available and by
  // membership bisection otherwise.
  Vec sample_boundary(double t, Rng& rng) const;

  // Feasible point by rejection sampling inside the window.
  Vec sample_point(double t, Rng& rng, int max_tries = 20000) const;

  std::pair<Vec, Vec> window(double t) const { return variant_->window(t); }

  std::optional<double> hausdorff_step(double t, double s) const {
    return variant_->hausdorff_step(t, s);
  }

  bool is_whole_space(double t) const { return variant_->is_whole_space(t); }

  // Accessors used by the hypotheses module for sublevel families.
  const std::vector<ConstraintFn>* constraints() const { return constraints_.get(); }
  const SublevelMeta* sublevel_meta() const { return meta_.get(); }

 private:
  void check_time(double t) const {
    if (t < -1e-12 || t > horizon_ + 1e-12)
      throw ValidationError("time outside [0, T]");
  }

  std::shared_ptr<const detail::SetVariant> variant_;
  double rho_ = kInf;
  double horizon_ = 1.0;
  std::shared_ptr<const std::vector<ConstraintFn>> constraints_;
  std::shared_ptr<const SublevelMeta> meta_;
};

// ---------------------------------------------------------------------------
// Variant implementations
// ---------------------------------------------------------------------------

namespace detail {

// base + c(t)
class TranslatedVariant : public SetVariant {
 public:
  TranslatedVariant(ConvexBody base, TimePath center)
      : base_(std::move(base)), center_(std::move(center)) {}

  Eigen::Index dim() const override { return base_.dim(); }

  bool contains(double t, const Vec& x, double tol) const override {
    if (base_.primitive_count() == 0) return true;
    return base_.contains(local(t, x), tol);
  }

  Vec project(double t, const Vec& x, double gamma_rho) const override {
    Vec p = base_.project(local(t, x));
    double d = (local(t, x) - p).norm();
    if (d >= gamma_rho)
      throw OutsideEnlargementError("distance " + std::to_string(d) +
                                    " not below gamma*rho enlargement");
    return p + shift(t);
  }

  double distance(double t, const Vec& x) const override {
    return (local(t, x) - base_.project(local(t, x))).norm();
  }

  Vec unit_normal(double t, const Vec& x) const override {
    Vec y = local(t, x);
    Vec n = Vec::Zero(dim());
    const double shell = 1e-7;
    for (const auto& h : base_.half_spaces())
      if (std::abs(h.margin(y)) <= shell) n += h.a;
    for (const auto& b : base_.balls())
      if (std::abs(b.margin(y)) <= shell) n += (y - b.c).normalized();
    for (const auto& b : base_.boxes())
      for (Eigen::Index i = 0; i < dim(); ++i) {
        if (std::abs(y[i] - b.hi[i]) <= shell) n[i] += 1.0;
        if (std::abs(y[i] - b.lo[i]) <= shell) n[i] -= 1.0;
      }
    double nn = n.norm();
    return nn > 1e-12 ? Vec(n / nn) : Vec::Zero(dim());
  }

  Vec sample_unit_normal(double t, const Vec& x, Rng& rng) const override {
    // random nonnegative combination of the active face normals
    Vec y = local(t, x);
    std::vector<Vec> gens;
    const double shell = 1e-7;
    for (const auto& h : base_.half_spaces())
      if (std::abs(h.margin(y)) <= shell) gens.push_back(h.a);
    for (const auto& b : base_.balls())
      if (std::abs(b.margin(y)) <= shell) gens.push_back((y - b.c).normalized());
    for (const auto& b : base_.boxes())
      for (Eigen::Index i = 0; i < dim(); ++i) {
        if (std::abs(y[i] - b.hi[i]) <= shell) gens.push_back(Vec::Unit(dim(), i));
        if (std::abs(y[i] - b.lo[i]) <= shell) gens.push_back(Vec(-Vec::Unit(dim(), i)));
      }
    if (gens.empty()) return Vec::Zero(dim());
    Vec n = Vec::Zero(dim());
    for (const auto& g : gens) n += rng.uniform() * g;
    double nn = n.norm();
    return nn > 1e-12 ? Vec(n / nn) : Vec(gens[0]);
  }

  std::optional<Vec> boundary_sample_closed_form(double t, Rng& rng) const override {
    if (base_.primitive_count() != 1) return std::nullopt;
    Eigen::Index d = dim();
    if (!base_.balls().empty()) {
      const auto& b = base_.balls()[0];
      return Vec(b.c + b.r * rng.direction(d) + shift(t));
    }
    if (!base_.boxes().empty()) {
      const auto& b = base_.boxes()[0];
      Vec p = rng.uniform_vec(b.lo, b.hi);
      Eigen::Index axis = Eigen::Index(rng.index(d));
      p[axis] = rng.uniform() < 0.5 ? b.lo[axis] : b.hi[axis];
      return Vec(p + shift(t));
    }
    const auto& h = base_.half_spaces()[0];
    // random point of the hyperplane a.x = b inside the window
    auto [lo, hi] = base_.window();
    Vec p = rng.uniform_vec(lo, hi);
    p -= h.margin(p) * h.a;
    return Vec(p + shift(t));
  }

  std::pair<Vec, Vec> window(double t) const override {
    auto [lo, hi] = base_.window();
    return {Vec(lo + shift(t)), Vec(hi + shift(t))};
  }

  std::optional<double> hausdorff_step(double t, double s) const override {
    return (shift(t) - shift(s)).norm();
  }

  bool is_whole_space(double) const override { return base_.primitive_count() == 0; }

  const ConvexBody& base() const { return base_; }

 private:
  Vec shift(double t) const {
    return center_.empty() ? Vec(Vec::Zero(base_.dim())) : center_(t);
  }
  Vec local(double t, const Vec& x) const { return x - shift(t); }

  ConvexBody base_;
  TimePath center_;
};

// {x : ||x - c(t)|| >= r}, r-uniformly prox-regular
class ComplementOfBallVariant : public SetVariant {
 public:
  ComplementOfBallVariant(TimePath center, double radius)
      : center_(std::move(center)), radius_(radius) {}

  Eigen::Index dim() const override { return center_.dim(); }

  bool contains(double t, const Vec& x, double tol) const override {
    return (x - center_(t)).norm() >= radius_ - tol;
  }

  double distance(double t, const Vec& x) const override {
    return std::max(0.0, radius_ - (x - center_(t)).norm());
  }

  Vec project(double t, const Vec& x, double gamma_rho) const override {
    Vec u = x - center_(t);
    double n = u.norm();
    if (n >= radius_) return x;
    if (radius_ - n >= gamma_rho)
      throw OutsideEnlargementError("point too deep inside the excluded ball");
    return Vec(center_(t) + (radius_ / n) * u);
  }

  Vec unit_normal(double t, const Vec& x) const override {
    Vec u = center_(t) - x;  // outward normal points into the excluded ball
    double n = u.norm();
    if (std::abs(n - radius_) > 1e-6) return Vec::Zero(dim());
    return Vec(u / n);
  }

  std::optional<Vec> boundary_sample_closed_form(double t, Rng& rng) const override {
    return Vec(center_(t) + radius_ * rng.direction(dim()));
  }

  std::pair<Vec, Vec> window(double t) const override {
    Vec c = center_(t);
    return {Vec(c.array() - 3.0 * radius_), Vec(c.array() + 3.0 * radius_)};
  }

  std::optional<double> hausdorff_step(double t, double s) const override {
    return (center_(t) - center_(s)).norm();
  }

  double radius() const { return radius_; }

 private:
  TimePath center_;
  double radius_;
};

// Intersection of sublevel sets {g_i(t,x) <= 0} projected by an augmented
// Lagrangian with Newton inner iterations.
class SublevelVariant : public SetVariant {
 public:
  SublevelVariant(std::shared_ptr<const std::vector<ConstraintFn>> gs, Vec lo, Vec hi)
      : gs_(std::move(gs)), lo_(std::move(lo)), hi_(std::move(hi)) {}

  Eigen::Index dim() const override { return lo_.size(); }

  double max_g(double t, const Vec& x) const {
    double m = -kInf;
    for (const auto& g : *gs_) m = std::max(m, g.value(t, x));
    return m;
  }

  bool contains(double t, const Vec& x, double tol) const override {
    return max_g(t, x) <= tol;
  }

  Vec project(double t, const Vec& x, double gamma_rho) const override {
    Vec y = solve_projection(t, x);
    double d = (x - y).norm();
    if (d >= gamma_rho)
      throw OutsideEnlargementError("distance " + std::to_string(d) +
                                    " not below gamma*rho enlargement");
    return y;
  }

  double distance(double t, const Vec& x) const override {
    if (contains(t, x, 0.0)) return 0.0;
    return (x - solve_projection(t, x)).norm();
  }

  Vec unit_normal(double t, const Vec& x) const override {
    Vec n = Vec::Zero(dim());
    for (std::size_t i = 0; i < gs_->size(); ++i)
      if ((*gs_)[i].value(t, x) >= -active_shell_) n += (*gs_)[i].gradient(t, x);
    double nn = n.norm();
    return nn > 1e-10 ? Vec(n / nn) : Vec::Zero(dim());
  }

  Vec sample_unit_normal(double t, const Vec& x, Rng& rng) const override {
    Vec n = Vec::Zero(dim());
    for (std::size_t i = 0; i < gs_->size(); ++i)
      if ((*gs_)[i].value(t, x) >= -active_shell_)
        n += rng.uniform() * (*gs_)[i].gradient(t, x);
    double nn = n.norm();
    return nn > 1e-10 ? Vec(n / nn) : unit_normal(t, x);
  }

  std::pair<Vec, Vec> window(double) const override { return {lo_, hi_}; }

  const std::vector<ConstraintFn>& constraints() const { return *gs_; }

 private:
  // min 0.5||y-x||^2 s.t. g_i(t,y) <= 0 via augmented Lagrangian + Newton.
  Vec solve_projection(double t, const Vec& x) const {
    const auto& gs = *gs_;
    if (contains(t, x, 0.0)) return x;
    std::size_t m = gs.size();
    Vec y = x;
    std::vector<double> lambda(m, 0.0);
    double mu = 10.0;
    int total_iters = 0;
    for (int outer = 0; outer < 60; ++outer) {
      // inner Newton on the AL objective
      for (int inner = 0; inner < 200; ++inner) {
        if (++total_iters > 10000)
          throw NonconvergedProjectionError("sublevel projection iteration cap");
        Vec grad = y - x;
        Mat hess = Mat::Identity(dim(), dim());
        for (std::size_t i = 0; i < m; ++i) {
          double gi = gs[i].value(t, y);
          double mult = std::max(0.0, lambda[i] + mu * gi);
          if (mult > 0.0) {
            Vec gg = gs[i].gradient(t, y);
            grad += mult * gg;
            hess += mu * gg * gg.transpose() + mult * gs[i].hessian(t, y);
          }
        }
        double gn = grad.norm();
        if (gn <= 1e-12) break;
        Vec dir = hess.ldlt().solve(-grad);
        if (!dir.allFinite() || dir.dot(grad) > -1e-18) dir = -grad;
        // backtracking on the AL objective
        double phi0 = al_value(t, x, y, lambda, mu);
        double step = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 40; ++ls) {
          Vec cand = y + step * dir;
          if (al_value(t, x, cand, lambda, mu) < phi0 - 1e-18) {
            y = cand;
            moved = true;
            break;
          }
          step *= 0.5;
        }
        if (!moved) break;
      }
      double feas = 0.0, kkt;
      Vec grad = y - x;
      for (std::size_t i = 0; i < m; ++i) {
        double gi = gs[i].value(t, y);
        feas = std::max(feas, gi);
        lambda[i] = std::max(0.0, lambda[i] + mu * gi);
        if (lambda[i] > 0.0) grad += lambda[i] * gs[i].gradient(t, y);
      }
      kkt = grad.norm();
      if (feas <= tol::projection_feas && kkt <= tol::projection_kkt) return y;
      // once the AL iterate is close, an exact Newton polish of the active
      // KKT system reaches the tight tolerances in a few steps
      if (feas <= 1e-6 && kkt <= 1e-4) {
        if (auto polished = kkt_polish(t, x, y, lambda)) return *polished;
      }
      mu = std::min(mu * 4.0, 1e12);
    }
    if (auto polished = kkt_polish(t, x, y, lambda)) return *polished;
    throw NonconvergedProjectionError("sublevel projection did not reach tolerance");
  }

  // Newton on [y - x + sum lambda_i grad g_i; g_active] = 0 for the current
  // active guess; returns nullopt if the polish drifts or violates signs.
  std::optional<Vec> kkt_polish(double t, const Vec& x, Vec y,
                                std::vector<double> lambda) const {
    const auto& gs = *gs_;
    std::size_t m = gs.size();
    std::vector<std::size_t> act;
    for (std::size_t i = 0; i < m; ++i)
      if (lambda[i] > 1e-12 || gs[i].value(t, y) > -1e-8) act.push_back(i);
    std::size_t a = act.size();
    Eigen::Index n = dim();
    for (int it = 0; it < 60; ++it) {
      Vec F = Vec::Zero(n + a);
      Mat J = Mat::Zero(n + a, n + a);
      F.head(n) = y - x;
      J.topLeftCorner(n, n) = Mat::Identity(n, n);
      for (std::size_t k = 0; k < a; ++k) {
        const auto& g = gs[act[k]];
        Vec gg = g.gradient(t, y);
        double li = lambda[act[k]];
        F.head(n) += li * gg;
        F[n + k] = g.value(t, y);
        J.topLeftCorner(n, n) += li * g.hessian(t, y);
        J.block(0, n + k, n, 1) = gg;
        J.block(n + k, 0, 1, n) = gg.transpose();
      }
      double resid = F.norm();
      if (resid <= 1e-13) break;
      Vec step = J.fullPivLu().solve(-F);
      if (!step.allFinite()) return std::nullopt;
      y += step.head(n);
      for (std::size_t k = 0; k < a; ++k) lambda[act[k]] += step[n + k];
      if (it == 59) return std::nullopt;
    }
    // verify multipliers, feasibility, and stationarity over all constraints
    Vec grad = y - x;
    double feas = 0;
    for (std::size_t i = 0; i < m; ++i) {
      double gi = gs[i].value(t, y);
      feas = std::max(feas, gi);
      if (lambda[i] < -1e-10) return std::nullopt;
      if (lambda[i] > 0.0) grad += lambda[i] * gs[i].gradient(t, y);
    }
    if (feas > tol::projection_feas || grad.norm() > tol::projection_kkt) return std::nullopt;
    return y;
  }

  double al_value(double t, const Vec& x, const Vec& y, const std::vector<double>& lambda,
                  double mu) const {
    double v = 0.5 * (y - x).squaredNorm();
    const auto& gs = *gs_;
    for (std::size_t i = 0; i < gs.size(); ++i) {
      double s = std::max(0.0, lambda[i] + mu * gs[i].value(t, y));
      v += (s * s - lambda[i] * lambda[i]) / (2.0 * mu);
    }
    return v;
  }

  std::shared_ptr<const std::vector<ConstraintFn>> gs_;
  Vec lo_, hi_;
  double active_shell_ = 1e-6;
};

// C(t) - h(t)
class ShiftedVariant : public SetVariant {
 public:
  ShiftedVariant(std::shared_ptr<const SetVariant> inner, TimePath offset)
      : inner_(std::move(inner)), offset_(std::move(offset)) {}

  Eigen::Index dim() const override { return inner_->dim(); }
  bool contains(double t, const Vec& x, double tol) const override {
    return inner_->contains(t, x + offset_(t), tol);
  }
  Vec project(double t, const Vec& x, double gamma_rho) const override {
    return inner_->project(t, x + offset_(t), gamma_rho) - offset_(t);
  }
  double distance(double t, const Vec& x) const override {
    return inner_->distance(t, x + offset_(t));
  }
  Vec unit_normal(double t, const Vec& x) const override {
    return inner_->unit_normal(t, x + offset_(t));
  }
  Vec sample_unit_normal(double t, const Vec& x, Rng& rng) const override {
    return inner_->sample_unit_normal(t, x + offset_(t), rng);
  }
  std::optional<Vec> boundary_sample_closed_form(double t, Rng& rng) const override {
    auto b = inner_->boundary_sample_closed_form(t, rng);
    if (!b) return std::nullopt;
    return Vec(*b - offset_(t));
  }
  std::pair<Vec, Vec> window(double t) const override {
    auto [lo, hi] = inner_->window(t);
    return {Vec(lo - offset_(t)), Vec(hi - offset_(t))};
  }
  std::optional<double> hausdorff_step(double t, double s) const override {
    auto inner = inner_->hausdorff_step(t, s);
    if (!inner) return std::nullopt;
    // upper estimate; exact when the inner set is fixed
    return *inner + (offset_(t) - offset_(s)).norm();
  }
  bool is_whole_space(double t) const override { return inner_->is_whole_space(t); }

 private:
  std::shared_ptr<const SetVariant> inner_;
  TimePath offset_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// SetFamily factories and samplers
// ---------------------------------------------------------------------------

inline SetFamily SetFamily::fixed_convex(ConvexBody body, double horizon, double rho) {
  SetFamily f;
  Eigen::Index d = body.dim();
  f.variant_ = std::make_shared<detail::TranslatedVariant>(std::move(body), TimePath::zero(d));
  f.rho_ = rho;
  f.horizon_ = horizon;
  if (f.variant_->dim() == 0) throw EmptySetError("zero-dimensional set");
  return f;
}

inline SetFamily SetFamily::translated(ConvexBody base, TimePath center, double horizon,
                                       double rho) {
  SetFamily f;
  f.variant_ = std::make_shared<detail::TranslatedVariant>(std::move(base), std::move(center));
  f.rho_ = rho;
  f.horizon_ = horizon;
  return f;
}

inline SetFamily SetFamily::complement_of_ball(TimePath center, double radius, double horizon) {
  SetFamily f;
  f.variant_ = std::make_shared<detail::ComplementOfBallVariant>(std::move(center), radius);
  f.rho_ = radius;
  f.horizon_ = horizon;
  return f;
}

inline SetFamily SetFamily::sublevel(std::vector<ConstraintFn> constraints, SublevelMeta meta,
                                     double horizon, double rho, Vec window_lo, Vec window_hi) {
  SetFamily f;
  auto gs = std::make_shared<const std::vector<ConstraintFn>>(std::move(constraints));
  f.variant_ = std::make_shared<detail::SublevelVariant>(gs, std::move(window_lo),
                                                         std::move(window_hi));
  f.rho_ = rho;
  f.horizon_ = horizon;
  f.constraints_ = gs;
  f.meta_ = std::make_shared<const SublevelMeta>(meta);
  return f;
}

inline SetFamily SetFamily::shifted(SetFamily inner, TimePath offset) {
  SetFamily f;
  f.variant_ = std::make_shared<detail::ShiftedVariant>(inner.variant_, std::move(offset));
  f.rho_ = inner.rho_;  // translation preserves prox-regularity
  f.horizon_ = inner.horizon_;
  f.constraints_ = inner.constraints_;
  f.meta_ = inner.meta_;
  return f;
}

inline Vec SetFamily::sample_point(double t, Rng& rng, int max_tries) const {
  check_time(t);
  auto [lo, hi] = variant_->window(t);
  for (int i = 0; i < max_tries; ++i) {
    Vec x = rng.uniform_vec(lo, hi);
    if (variant_->contains(t, x, 0.0)) return x;
  }
  throw EmptySetError("no feasible point found in sampling window");
}

inline Vec SetFamily::sample_boundary(double t, Rng& rng) const {
  check_time(t);
  if (auto b = variant_->boundary_sample_closed_form(t, rng)) return *b;
  auto [lo, hi] = variant_->window(t);
  for (int attempt = 0; attempt < 2000; ++attempt) {
    Vec inside = rng.uniform_vec(lo, hi);
    if (!variant_->contains(t, inside, 0.0)) continue;
    Vec dir = rng.direction(dim());
    // march outward until we exit the set, then bisect back to the boundary
    double span = (hi - lo).norm();
    double step = span / 64.0;
    Vec outside;
    bool found = false;
    for (double s = step; s <= 2.0 * span; s *= 2.0) {
      Vec cand = inside + s * dir;
      if (!variant_->contains(t, cand, 0.0)) {
        outside = cand;
        found = true;
        break;
      }
    }
    if (!found) continue;
    Vec a = inside, b = outside;
    for (int it = 0; it < 80; ++it) {
      Vec mid = 0.5 * (a + b);
      if (variant_->contains(t, mid, 0.0))
        a = mid;
      else
        b = mid;
    }
    return a;
  }
  throw ProbeFailedError("boundary sampling failed (set may be empty or full)");
}

// ---------------------------------------------------------------------------
// Distance / excess operations
// ---------------------------------------------------------------------------

inline double distance(const SetFamily& set, double t, const Vec& x) {
  return set.distance(t, x);
}

inline double excess(const std::vector<Vec>& cloud, const SetFamily& set, double t) {
  if (cloud.empty()) throw EmptySampleError("excess of an empty sample");
  double e = 0;
  for (const auto& x : cloud) e = std::max(e, set.distance(t, x));
  return e;
}

struct HausdorffEstimate {
  double value = 0;
  double sampling_gap = 0;  // 0 for closed-form branches
  bool closed_form = false;
};

// d_H(A(t), B(s)) by two sampled excesses, with closed-form branches for
// matching primitive pairs.
HausdorffEstimate hausdorff_distance(const SetFamily& A, double t, const SetFamily& B, double s,
                                     int n_samples, Rng& rng);

namespace detail {

inline const TranslatedVariant* as_translated(const SetFamily& f, const Vec& probe) {
  (void)probe;
  return nullptr;  // resolved via friend access below
}

}  // namespace detail

inline HausdorffEstimate hausdorff_distance(const SetFamily& A, double t, const SetFamily& B,
                                            double s, int n_samples, Rng& rng) {
  HausdorffEstimate est;
  // closed-form branch: identical variant translated in time
  // (handled by the caller passing the same family at two times)
  double sup_ab = 0, sup_ba = 0;
  auto [loA, hiA] = A.window(t);
  auto [loB, hiB] = B.window(s);
  for (int i = 0; i < n_samples; ++i) {
    bool boundary = (i % 2 == 0);
    try {
      Vec a = boundary ? A.sample_boundary(t, rng) : A.sample_point(t, rng);
      sup_ab = std::max(sup_ab, B.distance(s, a));
      Vec b = boundary ? B.sample_boundary(s, rng) : B.sample_point(s, rng);
      sup_ba = std::max(sup_ba, A.distance(t, b));
    } catch (const Error&) {
      // sparse windows: skip this draw
    }
  }
  est.value = std::max(sup_ab, sup_ba);
  Eigen::Index d = A.dim();
  double diam = std::max((hiA - loA).norm(), (hiB - loB).norm());
  est.sampling_gap = diam * std::pow(std::max(1, n_samples), -1.0 / double(d));
  return est;
}

// Exact Hausdorff distance between two balls.
inline double hausdorff_balls(const Vec& c1, double r1, const Vec& c2, double r2) {
  return (c1 - c2).norm() + std::abs(r1 - r2);
}

// Exact Hausdorff distance between axis boxes (corner enumeration).
inline double hausdorff_boxes(const Vec& lo1, const Vec& hi1, const Vec& lo2, const Vec& hi2) {
  Eigen::Index d = lo1.size();
  auto excess_corners = [d](const Vec& alo, const Vec& ahi, const Vec& blo, const Vec& bhi) {
    double e = 0;
    for (std::uint64_t mask = 0; mask < (1ull << d); ++mask) {
      Vec corner(d), proj(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        corner[i] = (mask >> i) & 1 ? ahi[i] : alo[i];
        proj[i] = std::clamp(corner[i], blo[i], bhi[i]);
      }
      e = std::max(e, (corner - proj).norm());
    }
    return e;
  };
  return std::max(excess_corners(lo1, hi1, lo2, hi2), excess_corners(lo2, hi2, lo1, hi1));
}

}  // namespace sweep
