#include "detgeom/nms.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace detgeom {

std::string_view to_string(SuppressionMetric metric) noexcept {
  switch (metric) {
    case SuppressionMetric::IoU:
      return "iou";
    case SuppressionMetric::DIoU:
      return "diou";
  }
  return "unknown";
}

SuppressionMetric parse_suppression_metric(std::string_view token) {
  if (token == "iou") return SuppressionMetric::IoU;
  if (token == "diou") return SuppressionMetric::DIoU;
  throw std::invalid_argument("unknown suppression metric '" + std::string(token) + "'");
}

double suppression_score(SuppressionMetric metric, const Box& a, const Box& b) noexcept {
  return metric == SuppressionMetric::DIoU ? diou_metric(a, b) : iou(a, b);
}

std::vector<Detection> greedy_nms(std::span<const Detection> dets, double threshold,
                                  SuppressionMetric metric) {
  if (!(threshold >= 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("nms threshold must lie in [0, 1)");
  }
  for (const auto& d : dets) {
    if (d.image_id != dets.front().image_id) {
      throw std::invalid_argument("greedy_nms expects detections of one image, got '" +
                                  dets.front().image_id + "' and '" + d.image_id + "'");
    }
  }

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  std::vector<Detection> kept;
  for (const std::size_t idx : order) {
    const Detection& cand = dets[idx];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return k.class_name == cand.class_name &&
             suppression_score(metric, k.box, cand.box) > threshold;
    });
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

}  // namespace detgeom
