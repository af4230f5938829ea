#include "detgeom/loss.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace detgeom {

namespace {

// Partials of a scalar with respect to (cx, cy, w, h).
using Partials = std::array<double, 4>;

constexpr Partials kZero{0.0, 0.0, 0.0, 0.0};
constexpr Partials kLeft{1.0, 0.0, -0.5, 0.0};    // x1 = cx - w/2
constexpr Partials kRight{1.0, 0.0, 0.5, 0.0};    // x2 = cx + w/2
constexpr Partials kTop{0.0, 1.0, 0.0, -0.5};     // y1 = cy - h/2
constexpr Partials kBottom{0.0, 1.0, 0.0, 0.5};   // y2 = cy + h/2

Partials operator+(const Partials& a, const Partials& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}

Partials operator-(const Partials& a, const Partials& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]};
}

Partials operator*(double s, const Partials& a) { return {s * a[0], s * a[1], s * a[2], s * a[3]}; }

void require_sizes(const CenterBox& pred, const CenterBox& gt) {
  if (!(gt.w > 0.0) || !(gt.h > 0.0)) {
    throw std::invalid_argument("ground-truth box must have positive width and height");
  }
  if (!(pred.w >= 0.0) || !(pred.h >= 0.0)) {
    throw std::invalid_argument("predicted box has negative or undefined size");
  }
}

}  // namespace

std::string_view to_string(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::IoU:
      return "iou";
    case LossKind::DIoU:
      return "diou";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view token) {
  if (token == "iou") return LossKind::IoU;
  if (token == "diou") return LossKind::DIoU;
  throw std::invalid_argument("unknown loss kind '" + std::string(token) + "'");
}

double loss(LossKind kind, const CenterBox& pred, const CenterBox& gt) {
  require_sizes(pred, gt);
  const Box p = to_corner(pred);
  const Box g = to_corner(gt);
  double value = 1.0 - iou(p, g);
  if (kind == LossKind::DIoU) value += diou_penalty(p, g);
  return value;
}

BoxGradient loss_gradient(LossKind kind, const CenterBox& pred, const CenterBox& gt) {
  require_sizes(pred, gt);
  if (!(pred.w > 0.0) || !(pred.h > 0.0)) {
    throw std::invalid_argument("predicted box must have positive width and height");
  }
  const Box p = to_corner(pred);
  const Box g = to_corner(gt);

  // Intersection extents. min/max pick the predicted edge on ties.
  const double iw = std::min(p.x2(), g.x2()) - std::max(p.x1(), g.x1());
  const double ih = std::min(p.y2(), g.y2()) - std::max(p.y1(), g.y1());

  double inter = 0.0;
  Partials d_inter = kZero;
  if (iw > 0.0 && ih > 0.0) {
    const Partials d_iw = (p.x2() <= g.x2() ? kRight : kZero) - (p.x1() >= g.x1() ? kLeft : kZero);
    const Partials d_ih = (p.y2() <= g.y2() ? kBottom : kZero) - (p.y1() >= g.y1() ? kTop : kZero);
    inter = iw * ih;
    d_inter = ih * d_iw + iw * d_ih;
  }

  const Partials d_area{0.0, 0.0, pred.h, pred.w};
  const double uni = pred.w * pred.h + gt.w * gt.h - inter;

  // d(I/U) with U = A_pred + A_gt - I.
  const double inv_u2 = 1.0 / (uni * uni);
  Partials d_loss = (-(uni + inter) * inv_u2) * d_inter + (inter * inv_u2) * d_area;

  if (kind == LossKind::DIoU) {
    const double dx = pred.cx - gt.cx;
    const double dy = pred.cy - gt.cy;
    const double rho2 = dx * dx + dy * dy;
    const Partials d_rho2{2.0 * dx, 2.0 * dy, 0.0, 0.0};

    const double cw = std::max(p.x2(), g.x2()) - std::min(p.x1(), g.x1());
    const double ch = std::max(p.y2(), g.y2()) - std::min(p.y1(), g.y1());
    const Partials d_cw = (p.x2() >= g.x2() ? kRight : kZero) - (p.x1() <= g.x1() ? kLeft : kZero);
    const Partials d_ch = (p.y2() >= g.y2() ? kBottom : kZero) - (p.y1() <= g.y1() ? kTop : kZero);
    const double c2 = cw * cw + ch * ch;
    const Partials d_c2 = (2.0 * cw) * d_cw + (2.0 * ch) * d_ch;

    d_loss = d_loss + (1.0 / c2) * d_rho2 - (rho2 / (c2 * c2)) * d_c2;
  }

  return {d_loss[0], d_loss[1], d_loss[2], d_loss[3]};
}

BoxGradient finite_diff_gradient(LossKind kind, const CenterBox& pred, const CenterBox& gt,
                                 double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  auto partial = [&](double CenterBox::*field) {
    CenterBox lo = pred;
    CenterBox hi = pred;
    lo.*field -= eps;
    hi.*field += eps;
    return (loss(kind, hi, gt) - loss(kind, lo, gt)) / (2.0 * eps);
  };
  return {partial(&CenterBox::cx), partial(&CenterBox::cy), partial(&CenterBox::w),
          partial(&CenterBox::h)};
}

}  // namespace detgeom
