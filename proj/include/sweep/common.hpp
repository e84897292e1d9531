#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sweep {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Default tolerances used across the toolkit.
namespace tol {
inline constexpr double feasibility = 1e-9;
inline constexpr double projection_kkt = 1e-10;
inline constexpr double projection_feas = 1e-12;
inline constexpr double membership = 1e-9;
inline constexpr double prox_inequality = 1e-8;
inline constexpr double boundary_shell = 1e-6;
inline constexpr double duality_gap = 1e-9;
}  // namespace tol

// Error taxonomy. Every failure mode carries a stable name so the CLI can
// map it to an exit code and report it in JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

#define SWEEP_DEFINE_ERROR(NAME)                                 \
  class NAME : public Error {                                    \
   public:                                                       \
    explicit NAME(const std::string& what) : Error(#NAME, what) {} \
  }

SWEEP_DEFINE_ERROR(EmptySetError);
SWEEP_DEFINE_ERROR(EmptySampleError);
SWEEP_DEFINE_ERROR(EmptyComplementError);
SWEEP_DEFINE_ERROR(OutsideEnlargementError);
SWEEP_DEFINE_ERROR(NonconvergedProjectionError);
SWEEP_DEFINE_ERROR(ProbeFailedError);
SWEEP_DEFINE_ERROR(NormalProbeFailedError);
SWEEP_DEFINE_ERROR(InfeasibleError);
SWEEP_DEFINE_ERROR(InfeasibleStartError);
SWEEP_DEFINE_ERROR(StepTooLargeError);
SWEEP_DEFINE_ERROR(NoActivePointsError);
SWEEP_DEFINE_ERROR(NonnegativeKappaError);
SWEEP_DEFINE_ERROR(BallNotContainedError);
SWEEP_DEFINE_ERROR(EnvelopeViolatedError);
SWEEP_DEFINE_ERROR(HypothesisViolatedError);
SWEEP_DEFINE_ERROR(NoFeasibleGridPointError);
SWEEP_DEFINE_ERROR(ValidationError);

#undef SWEEP_DEFINE_ERROR

inline bool is_finite(double x) { return std::isfinite(x); }

// 1/rho with the convention 1/inf = 0 (convex case).
inline double inv_or_zero(double rho) { return std::isinf(rho) ? 0.0 : 1.0 / rho; }

}  // namespace sweep
