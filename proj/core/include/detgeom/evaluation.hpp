#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "detgeom/dataset_io.hpp"
#include "detgeom/detection.hpp"

namespace detgeom {

inline constexpr double kDefaultMatchIou = 0.5;

enum class Outcome { TruePositive, FalsePositive };

/// Matching of one image's detections against its ground truth. Vectors are
/// indexed like the input detections.
struct MatchResult {
  std::vector<Outcome> outcomes;
  std::vector<double> matched_iou;  // IoU with the matched object, 0 for false positives
  std::size_t false_negatives = 0;

  std::size_t true_positives() const noexcept;
  std::size_t false_positives() const noexcept;
};

/// Greedy one-to-one matching. Detections are visited by descending score
/// (ties keep input order); each takes the unmatched same-class object with the
/// highest IoU if that IoU reaches `iou_threshold`. Throws std::invalid_argument
/// when the records do not share one image id.
MatchResult match_image(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                        double iou_threshold);

/// TP / (TP + FP); 1 when nothing was predicted.
double precision(std::size_t tp, std::size_t fp) noexcept;

/// TP / (TP + FN); 1 when there is nothing to find.
double recall(std::size_t tp, std::size_t fn) noexcept;

struct PRPoint {
  double score_threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// A matched detection reduced to what the PR curve needs.
struct ScoredOutcome {
  double score = 0.0;
  bool true_positive = false;
};

/// One point per score-ordered prefix of `flagged` (ties keep span order),
/// measured against `total_gt` objects.
std::vector<PRPoint> pr_curve(std::span<const ScoredOutcome> flagged, std::size_t total_gt);

enum class ApMethod { AllPoint, ElevenPoint };

std::string_view to_string(ApMethod method) noexcept;
/// "allpoint" or "elevenpoint".
ApMethod parse_ap_method(std::string_view token);

/// Area under the precision envelope (max precision at or beyond each recall).
/// AllPoint integrates every recall step; ElevenPoint averages the envelope at
/// recall 0.0, 0.1, ..., 1.0. Empty curve gives 0.
double average_precision(std::span<const PRPoint> curve, ApMethod method);

struct EvalReport {
  std::size_t predicted_count = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t total_gt = 0;
  std::size_t unknown_image_detections = 0;  // counted as false positives
  double precision = 1.0;
  double recall = 1.0;
  double ap = 0.0;
  ApMethod method = ApMethod::AllPoint;
  std::vector<PRPoint> pr_curve;
};

EvalReport evaluate(const DatasetIndex& index, std::span<const Detection> dets,
                    double iou_threshold = kDefaultMatchIou, ApMethod method = ApMethod::AllPoint);

/// "score,precision,recall" table, six decimals.
std::string pr_curve_table(std::span<const PRPoint> curve);

/// JSON object mirroring EvalReport (without the curve).
std::string report_json(const EvalReport& report);

}  // namespace detgeom
