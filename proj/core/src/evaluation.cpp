#include "detgeom/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace detgeom {

namespace {

// Recall levels of the eleven-point method are compared with this slack so
// that e.g. 7/10 and 21/30 land on the same level.
constexpr double kRecallSlack = 1e-12;

std::vector<std::size_t> score_order(std::size_t n, auto score_of) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score_of(a) > score_of(b); });
  return order;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::size_t MatchResult::true_positives() const noexcept {
  return static_cast<std::size_t>(std::count(outcomes.begin(), outcomes.end(), Outcome::TruePositive));
}

std::size_t MatchResult::false_positives() const noexcept {
  return outcomes.size() - true_positives();
}

MatchResult match_image(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                        double iou_threshold) {
  const std::string* image_id = nullptr;
  auto check_id = [&](const std::string& id) {
    if (image_id == nullptr) {
      image_id = &id;
    } else if (*image_id != id) {
      throw std::invalid_argument("match_image expects one image, got '" + *image_id + "' and '" +
                                  id + "'");
    }
  };
  for (const auto& d : dets) check_id(d.image_id);
  for (const auto& g : gts) check_id(g.image_id);

  MatchResult result;
  result.outcomes.assign(dets.size(), Outcome::FalsePositive);
  result.matched_iou.assign(dets.size(), 0.0);
  std::vector<bool> taken(gts.size(), false);

  for (const std::size_t di : score_order(dets.size(), [&](std::size_t i) { return dets[i].score; })) {
    const Detection& det = dets[di];
    double best_iou = -1.0;
    std::size_t best = gts.size();
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (taken[gi] || gts[gi].class_name != det.class_name) continue;
      const double overlap = iou(det.box, gts[gi].box);
      if (overlap > best_iou) {
        best_iou = overlap;
        best = gi;
      }
    }
    if (best < gts.size() && best_iou >= iou_threshold) {
      taken[best] = true;
      result.outcomes[di] = Outcome::TruePositive;
      result.matched_iou[di] = best_iou;
    }
  }
  result.false_negatives = static_cast<std::size_t>(std::count(taken.begin(), taken.end(), false));
  return result;
}

double precision(std::size_t tp, std::size_t fp) noexcept {
  if (tp + fp == 0) return 1.0;
  return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double recall(std::size_t tp, std::size_t fn) noexcept {
  if (tp + fn == 0) return 1.0;
  return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

std::vector<PRPoint> pr_curve(std::span<const ScoredOutcome> flagged, std::size_t total_gt) {
  std::vector<PRPoint> curve;
  curve.reserve(flagged.size());
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (const std::size_t i : score_order(flagged.size(), [&](std::size_t k) { return flagged[k].score; })) {
    if (flagged[i].true_positive) {
      ++tp;
    } else {
      ++fp;
    }
    const std::size_t missed = total_gt >= tp ? total_gt - tp : 0;
    curve.push_back({flagged[i].score, precision(tp, fp), recall(tp, missed)});
  }
  return curve;
}

std::string_view to_string(ApMethod method) noexcept {
  switch (method) {
    case ApMethod::AllPoint:
      return "allpoint";
    case ApMethod::ElevenPoint:
      return "elevenpoint";
  }
  return "unknown";
}

ApMethod parse_ap_method(std::string_view token) {
  if (token == "allpoint") return ApMethod::AllPoint;
  if (token == "elevenpoint") return ApMethod::ElevenPoint;
  throw std::invalid_argument("unknown AP method '" + std::string(token) + "'");
}

double average_precision(std::span<const PRPoint> curve, ApMethod method) {
  if (curve.empty()) return 0.0;

  // envelope[i] = max precision over points i..end
  std::vector<double> envelope(curve.size());
  double running = 0.0;
  for (std::size_t i = curve.size(); i-- > 0;) {
    running = std::max(running, curve[i].precision);
    envelope[i] = running;
  }

  if (method == ApMethod::AllPoint) {
    double area = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
      area += (curve[i].recall - prev_recall) * envelope[i];
      prev_recall = curve[i].recall;
    }
    return area;
  }

  double sum = 0.0;
  for (int level = 0; level <= 10; ++level) {
    const double r = level / 10.0;
    const auto it = std::find_if(curve.begin(), curve.end(),
                                 [&](const PRPoint& p) { return p.recall >= r - kRecallSlack; });
    if (it != curve.end()) sum += envelope[static_cast<std::size_t>(it - curve.begin())];
  }
  return sum / 11.0;
}

EvalReport evaluate(const DatasetIndex& index, std::span<const Detection> dets,
                    double iou_threshold, ApMethod method) {
  EvalReport report;
  report.method = method;
  report.predicted_count = dets.size();
  report.total_gt = index.total();

  std::map<std::string_view, std::vector<std::size_t>> by_image;
  for (std::size_t i = 0; i < dets.size(); ++i) by_image[dets[i].image_id].push_back(i);

  std::vector<ScoredOutcome> flagged(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) flagged[i].score = dets[i].score;

  std::size_t matched_gt = 0;
  for (const auto& [image_id, members] : by_image) {
    if (!index.contains(image_id)) {
      report.unknown_image_detections += members.size();
      continue;
    }
    std::vector<Detection> group;
    group.reserve(members.size());
    for (const std::size_t i : members) group.push_back(dets[i]);

    const MatchResult match = match_image(group, index.objects(image_id), iou_threshold);
    for (std::size_t k = 0; k < members.size(); ++k) {
      flagged[members[k]].true_positive = match.outcomes[k] == Outcome::TruePositive;
    }
    matched_gt += match.true_positives();
  }

  report.tp = matched_gt;
  report.fp = report.predicted_count - report.tp;
  report.fn = report.total_gt - report.tp;
  report.precision = precision(report.tp, report.fp);
  report.recall = recall(report.tp, report.fn);
  report.pr_curve = pr_curve(flagged, report.total_gt);
  report.ap = average_precision(report.pr_curve, method);
  return report;
}

std::string pr_curve_table(std::span<const PRPoint> curve) {
  std::string out = "score,precision,recall\n";
  for (const auto& p : curve) {
    out += fixed6(p.score_threshold) + ',' + fixed6(p.precision) + ',' + fixed6(p.recall) + '\n';
  }
  return out;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json doc;
  doc["predicted_count"] = report.predicted_count;
  doc["tp"] = report.tp;
  doc["fp"] = report.fp;
  doc["fn"] = report.fn;
  doc["total_gt"] = report.total_gt;
  doc["unknown_image_detections"] = report.unknown_image_detections;
  doc["precision"] = report.precision;
  doc["recall"] = report.recall;
  doc["ap"] = report.ap;
  doc["ap_method"] = std::string(to_string(report.method));
  return doc.dump(2);
}

}  // namespace detgeom
