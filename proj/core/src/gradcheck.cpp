#include "detgeom/gradcheck.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "detgeom/box.hpp"

namespace detgeom {

namespace {

bool edges_apart(const Box& a, const Box& b, double margin) {
  const std::array<double, 2> ax{a.x1(), a.x2()};
  const std::array<double, 2> bx{b.x1(), b.x2()};
  const std::array<double, 2> ay{a.y1(), a.y2()};
  const std::array<double, 2> by{b.y1(), b.y2()};
  for (const double u : ax) {
    for (const double v : bx) {
      if (std::abs(u - v) < margin) return false;
    }
  }
  for (const double u : ay) {
    for (const double v : by) {
      if (std::abs(u - v) < margin) return false;
    }
  }
  return true;
}

}  // namespace

ComponentCheck compare_partial(double analytic, double numeric, const GradientTolerance& tol) {
  ComponentCheck c;
  const double magnitude = std::max(std::abs(analytic), std::abs(numeric));
  c.absolute_error = std::abs(analytic - numeric);
  c.large = magnitude >= tol.small_magnitude;
  if (c.large) {
    c.relative_error = c.absolute_error / magnitude;
    c.pass = c.relative_error <= tol.relative;
  } else {
    c.pass = c.absolute_error <= tol.absolute;
  }
  return c;
}

GradCheckSampler::GradCheckSampler(std::uint64_t seed, double canvas, double tie_margin)
    : engine_(seed), canvas_(canvas), tie_margin_(tie_margin) {}

double GradCheckSampler::uniform(double lo, double hi) {
  const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

std::pair<CenterBox, CenterBox> GradCheckSampler::next() {
  const double max_size = 0.5 * canvas_;
  for (;;) {
    CenterBox gt{uniform(0.0, canvas_), uniform(0.0, canvas_), uniform(1.0, max_size),
                 uniform(1.0, max_size)};
    CenterBox pred{0.0, 0.0, uniform(1.0, max_size), uniform(1.0, max_size)};
    // Alternate near and far placements so both overlapping and disjoint
    // configurations are exercised.
    if (engine_() & 1U) {
      pred.cx = gt.cx + uniform(-1.0, 1.0) * 0.5 * (gt.w + pred.w);
      pred.cy = gt.cy + uniform(-1.0, 1.0) * 0.5 * (gt.h + pred.h);
    } else {
      pred.cx = uniform(0.0, canvas_);
      pred.cy = uniform(0.0, canvas_);
    }
    if (edges_apart(to_corner(pred), to_corner(gt), tie_margin_)) return {pred, gt};
  }
}

GradCheckReport run_gradient_check(LossKind kind, std::size_t samples, double eps,
                                   std::uint64_t seed, const GradientTolerance& tol) {
  GradCheckReport report;
  GradCheckSampler sampler(seed);
  for (std::size_t i = 0; i < samples; ++i) {
    const auto [pred, gt] = sampler.next();
    const BoxGradient a = loss_gradient(kind, pred, gt);
    const BoxGradient n = finite_diff_gradient(kind, pred, gt, eps);
    const std::array<std::pair<double, double>, 4> parts{
        {{a.d_cx, n.d_cx}, {a.d_cy, n.d_cy}, {a.d_w, n.d_w}, {a.d_h, n.d_h}}};
    for (const auto& [x, y] : parts) {
      const ComponentCheck c = compare_partial(x, y, tol);
      ++report.components;
      if (!c.pass) ++report.failures;
      if (c.large) {
        report.max_relative_error = std::max(report.max_relative_error, c.relative_error);
      } else {
        report.max_absolute_error = std::max(report.max_absolute_error, c.absolute_error);
      }
    }
    ++report.samples;
  }
  return report;
}

}  // namespace detgeom
