#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "detgeom/detection.hpp"

namespace detgeom {

enum class SuppressionMetric { IoU, DIoU };

std::string_view to_string(SuppressionMetric metric) noexcept;
SuppressionMetric parse_suppression_metric(std::string_view token);

inline constexpr double kDefaultNmsThreshold = 0.45;

double suppression_score(SuppressionMetric metric, const Box& a, const Box& b) noexcept;

/// Greedy non-maximum suppression over detections of a single image.
///
/// Candidates are visited by descending score (ties keep input order). A
/// candidate survives unless an already kept detection of the same class has
/// a suppression score strictly above `threshold`. The result is in kept order.
/// Throws std::invalid_argument on mixed image ids or a threshold outside [0, 1).
std::vector<Detection> greedy_nms(std::span<const Detection> dets, double threshold,
                                  SuppressionMetric metric);

}  // namespace detgeom
