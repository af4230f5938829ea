#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>

#include "detgeom/loss.hpp"

namespace detgeom {

/// Agreement rule between an analytic and a numeric partial: relative error
/// when the larger magnitude is at least `small_magnitude`, absolute error
/// otherwise.
struct GradientTolerance {
  double relative = 1e-5;
  double absolute = 1e-8;
  double small_magnitude = 1e-3;
};

struct ComponentCheck {
  double relative_error = 0.0;  // only meaningful for large components
  double absolute_error = 0.0;
  bool large = false;
  bool pass = true;
};

ComponentCheck compare_partial(double analytic, double numeric, const GradientTolerance& tol = {});

struct GradCheckReport {
  std::size_t samples = 0;
  std::size_t components = 0;
  std::size_t failures = 0;
  double max_relative_error = 0.0;  // over components with magnitude >= small_magnitude
  double max_absolute_error = 0.0;  // over components below it

  bool pass() const noexcept { return failures == 0; }
};

/// Random (pred, gt) pair with positive sizes whose corresponding edges are
/// at least `tie_margin` apart, so the loss is smooth around pred.
class GradCheckSampler {
public:
  explicit GradCheckSampler(std::uint64_t seed, double canvas = 100.0, double tie_margin = 1e-3);
  std::pair<CenterBox, CenterBox> next();

private:
  double uniform(double lo, double hi);

  std::mt19937_64 engine_;
  double canvas_;
  double tie_margin_;
};

/// Compares loss_gradient against finite_diff_gradient on `samples` random
/// pairs for one loss kind.
GradCheckReport run_gradient_check(LossKind kind, std::size_t samples, double eps,
                                   std::uint64_t seed, const GradientTolerance& tol = {});

}  // namespace detgeom
