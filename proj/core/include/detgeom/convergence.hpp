#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "detgeom/box.hpp"
#include "detgeom/loss.hpp"

namespace detgeom {

/// How the loss gradient is turned into a parameter step.
enum class StepScaling {
  /// pred -= lr * grad.
  Plain,
  /// Fixed-length step along the extent-scaled gradient. With ex, ey the
  /// width and height of the box enclosing pred and target,
  ///   u = (ex * d_cx, ey * d_cy, ex * d_w, ey * d_h)
  ///   pred -= lr * (ex, ey, ex, ey) * u / |u|
  /// The losses are scale-invariant and so is this step; a zero gradient
  /// leaves pred unchanged.
  EnclosingExtent,
};

std::string_view to_string(StepScaling scaling) noexcept;
StepScaling parse_step_scaling(std::string_view token);

/// Which random starts the benchmark keeps.
enum class StartFilter { Any, DisjointOnly, OverlappingOnly };

struct SimConfig {
  std::size_t case_count = 1000;
  std::uint64_t seed = 42;
  /// Plain: multiplier on the raw gradient. EnclosingExtent: fraction of the
  /// enclosing box extent moved per step.
  double learning_rate = 0.02;
  std::size_t max_steps = 10000;
  double stop_iou = 0.9;
  double canvas = 100.0;
  double min_size = 1.0;
  StepScaling scaling = StepScaling::EnclosingExtent;
  StartFilter start_filter = StartFilter::Any;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

struct Trajectory {
  LossKind kind = LossKind::IoU;
  std::vector<double> losses;     // one per visited state, starting with the initial box
  std::vector<CenterBox> boxes;   // same length as losses
  std::optional<std::size_t> steps_to_success;
  double final_iou = 0.0;

  double final_loss() const { return losses.back(); }
};

/// Fixed-step gradient descent from `init` towards `target`. Stops once
/// iou >= stop_iou or after max_steps updates; w and h are floored at min_size
/// after every update.
Trajectory run_case(const CenterBox& init, const CenterBox& target, LossKind kind,
                    const SimConfig& config);

struct CaseRecord {
  std::size_t index = 0;
  CenterBox init;
  CenterBox target;
  bool disjoint_start = false;
  double initial_loss_iou = 0.0;
  double initial_loss_diou = 0.0;
  std::optional<std::size_t> steps_iou;
  std::optional<std::size_t> steps_diou;
  double final_loss_iou = 0.0;
  double final_loss_diou = 0.0;
};

struct KindSummary {
  std::size_t cases = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  std::optional<double> median_steps;  // among successes
  std::optional<double> mean_steps;
  double mean_final_loss = 0.0;
};

enum class CaseSubset { All, DisjointStart, OverlappingStart };

KindSummary summarize(const std::vector<CaseRecord>& cases, LossKind kind,
                      CaseSubset subset = CaseSubset::All);

struct BenchmarkResult {
  SimConfig config;
  std::vector<CaseRecord> cases;

  KindSummary summary(LossKind kind, CaseSubset subset = CaseSubset::All) const {
    return summarize(cases, kind, subset);
  }
};

/// Deterministic stream of random (init, target) start pairs.
class CaseGenerator {
public:
  explicit CaseGenerator(const SimConfig& config);

  /// Next pair passing the configured start filter.
  std::pair<CenterBox, CenterBox> next();

private:
  double uniform(double lo, double hi);
  CenterBox draw_box();

  SimConfig config_;
  std::mt19937_64 engine_;
};

/// Runs both loss kinds from identical starts for every generated case.
BenchmarkResult run_benchmark(const SimConfig& config);

/// "step,loss_iou,loss_diou"; the shorter trace is padded with its last value.
std::string export_curves(const Trajectory& iou_run, const Trajectory& diou_run);

/// Paired per-case table.
std::string export_case_table(const std::vector<CaseRecord>& cases);

/// JSON summary per loss kind, overall and split by start type.
std::string summary_json(const BenchmarkResult& result);

}  // namespace detgeom
