#pragma once

#include <string>
#include <string_view>

#include "detgeom/box.hpp"

namespace detgeom {

enum class LossKind { IoU, DIoU };

/// "iou" / "diou".
std::string_view to_string(LossKind kind) noexcept;

/// Accepts the lowercase tokens produced by to_string; throws std::invalid_argument otherwise.
LossKind parse_loss_kind(std::string_view token);

/// Partial derivatives of a loss with respect to the predicted (cx, cy, w, h).
struct BoxGradient {
  double d_cx = 0.0;
  double d_cy = 0.0;
  double d_w = 0.0;
  double d_h = 0.0;

  friend bool operator==(const BoxGradient&, const BoxGradient&) = default;
};

/// IoU kind: 1 - iou. DIoU kind: 1 - iou + squared center distance over squared
/// enclosing diagonal. Throws std::invalid_argument when gt has zero area or a
/// size is negative.
double loss(LossKind kind, const CenterBox& pred, const CenterBox& gt);

/// Analytic gradient of loss(kind, ., gt) at pred.
///
/// The loss is piecewise smooth; its kinks sit where an edge of pred coincides
/// with an edge of gt. At such ties the predicted edge is taken as the binding
/// one (one-sided derivative). Throws std::invalid_argument for zero-area pred
/// or gt.
BoxGradient loss_gradient(LossKind kind, const CenterBox& pred, const CenterBox& gt);

/// Central differences (L(x + eps) - L(x - eps)) / (2 eps) per parameter.
BoxGradient finite_diff_gradient(LossKind kind, const CenterBox& pred, const CenterBox& gt,
                                 double eps);

}  // namespace detgeom
