#include "detgeom/box.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace detgeom {

Box::Box(double x1, double y1, double x2, double y2) : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
  // Negated comparisons so that NaN is rejected as well.
  if (!(x1 <= x2) || !(y1 <= y2)) {
    throw std::invalid_argument("invalid box corners " + to_string(*this));
  }
}

CenterBox to_center(const Box& box) noexcept {
  return {box.center_x(), box.center_y(), box.width(), box.height()};
}

Box to_corner(const CenterBox& box) {
  if (!(box.w >= 0.0) || !(box.h >= 0.0)) {
    throw std::invalid_argument("center box has negative or undefined size");
  }
  const double hw = 0.5 * box.w;
  const double hh = 0.5 * box.h;
  return {box.cx - hw, box.cy - hh, box.cx + hw, box.cy + hh};
}

std::string to_string(const Box& box) {
  std::ostringstream os;
  os << '(' << box.x1() << ", " << box.y1() << ", " << box.x2() << ", " << box.y2() << ')';
  return os.str();
}

double intersection_area(const Box& a, const Box& b) noexcept {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

double iou(const Box& a, const Box& b) noexcept {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

Box enclosing_box(const Box& a, const Box& b) noexcept {
  return {std::min(a.x1(), b.x1()), std::min(a.y1(), b.y1()), std::max(a.x2(), b.x2()),
          std::max(a.y2(), b.y2())};
}

double enclosing_diagonal_sq(const Box& a, const Box& b) noexcept {
  const double cw = std::max(a.x2(), b.x2()) - std::min(a.x1(), b.x1());
  const double ch = std::max(a.y2(), b.y2()) - std::min(a.y1(), b.y1());
  return cw * cw + ch * ch;
}

double center_distance_sq(const Box& a, const Box& b) noexcept {
  const double dx = a.center_x() - b.center_x();
  const double dy = a.center_y() - b.center_y();
  return dx * dx + dy * dy;
}

double diou_penalty(const Box& a, const Box& b) noexcept {
  const double c2 = enclosing_diagonal_sq(a, b);
  if (c2 <= 0.0) return 0.0;
  return center_distance_sq(a, b) / c2;
}

double diou_metric(const Box& a, const Box& b) noexcept { return iou(a, b) - diou_penalty(a, b); }

}  // namespace detgeom
