#pragma once

#include <string>

namespace detgeom {

/// Axis-aligned rectangle in continuous pixel coordinates (corner form).
/// x grows rightward, y grows downward. Zero-area boxes are allowed.
class Box {
public:
  Box() = default;

  /// Throws std::invalid_argument when x1 > x2, y1 > y2 or any coordinate is NaN.
  Box(double x1, double y1, double x2, double y2);

  double x1() const noexcept { return x1_; }
  double y1() const noexcept { return y1_; }
  double x2() const noexcept { return x2_; }
  double y2() const noexcept { return y2_; }

  double width() const noexcept { return x2_ - x1_; }
  double height() const noexcept { return y2_ - y1_; }
  double area() const noexcept { return width() * height(); }
  double center_x() const noexcept { return 0.5 * (x1_ + x2_); }
  double center_y() const noexcept { return 0.5 * (y1_ + y2_); }

  bool contains(const Box& other) const noexcept {
    return x1_ <= other.x1_ && y1_ <= other.y1_ && x2_ >= other.x2_ && y2_ >= other.y2_;
  }

  Box translated(double dx, double dy) const { return {x1_ + dx, y1_ + dy, x2_ + dx, y2_ + dy}; }

  friend bool operator==(const Box&, const Box&) = default;

private:
  double x1_ = 0.0;
  double y1_ = 0.0;
  double x2_ = 0.0;
  double y2_ = 0.0;
};

/// Center/size form, the parameterization used by the regression losses.
struct CenterBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  friend bool operator==(const CenterBox&, const CenterBox&) = default;
};

CenterBox to_center(const Box& box) noexcept;

/// Throws std::invalid_argument for negative or NaN sizes.
Box to_corner(const CenterBox& box);

std::string to_string(const Box& box);

double intersection_area(const Box& a, const Box& b) noexcept;

/// Intersection over union; 0 when the union has zero area.
double iou(const Box& a, const Box& b) noexcept;

/// Smallest axis-aligned box containing both inputs.
Box enclosing_box(const Box& a, const Box& b) noexcept;

/// Squared diagonal of enclosing_box(a, b).
double enclosing_diagonal_sq(const Box& a, const Box& b) noexcept;

double center_distance_sq(const Box& a, const Box& b) noexcept;

/// Squared center distance over squared enclosing diagonal. Returns 0 when the
/// enclosing box is a single point.
double diou_penalty(const Box& a, const Box& b) noexcept;

/// iou(a, b) - diou_penalty(a, b), the suppression metric used by DIoU-NMS.
double diou_metric(const Box& a, const Box& b) noexcept;

}  // namespace detgeom
