#include "detgeom/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace detgeom {

namespace {

// Rejection sampling gives up after this many draws for one filtered case.
constexpr int kMaxDrawsPerCase = 1'000'000;

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

CenterBox descend(const CenterBox& pred, const CenterBox& target, const BoxGradient& g,
                  const SimConfig& config) {
  const double lr = config.learning_rate;
  CenterBox next = pred;
  if (config.scaling == StepScaling::Plain) {
    next = {pred.cx - lr * g.d_cx, pred.cy - lr * g.d_cy, pred.w - lr * g.d_w, pred.h - lr * g.d_h};
  } else {
    const Box e = enclosing_box(to_corner(pred), to_corner(target));
    const double ex = e.width();
    const double ey = e.height();
    const double ux = ex * g.d_cx, uy = ey * g.d_cy, uw = ex * g.d_w, uh = ey * g.d_h;
    const double norm = std::sqrt(ux * ux + uy * uy + uw * uw + uh * uh);
    if (norm > 0.0) {
      const double kx = lr * ex * ex / norm;
      const double ky = lr * ey * ey / norm;
      next = {pred.cx - kx * g.d_cx, pred.cy - ky * g.d_cy, pred.w - kx * g.d_w, pred.h - ky * g.d_h};
    }
  }
  next.w = std::max(next.w, config.min_size);
  next.h = std::max(next.h, config.min_size);
  return next;
}

}  // namespace

std::string_view to_string(StepScaling scaling) noexcept {
  switch (scaling) {
    case StepScaling::Plain:
      return "plain";
    case StepScaling::EnclosingExtent:
      return "enclosing";
  }
  return "unknown";
}

StepScaling parse_step_scaling(std::string_view token) {
  if (token == "plain") return StepScaling::Plain;
  if (token == "enclosing") return StepScaling::EnclosingExtent;
  throw std::invalid_argument("unknown step scaling '" + std::string(token) + "'");
}

void SimConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(stop_iou > 0.0 && stop_iou <= 1.0)) throw std::invalid_argument("stop_iou must lie in (0, 1]");
  if (!(min_size > 0.0)) throw std::invalid_argument("min_size must be positive");
  if (!(canvas >= 2.0 * min_size)) throw std::invalid_argument("canvas must be at least 2 * min_size");
}

Trajectory run_case(const CenterBox& init, const CenterBox& target, LossKind kind,
                    const SimConfig& config) {
  config.validate();
  if (!(target.w > 0.0) || !(target.h > 0.0)) {
    throw std::invalid_argument("target must have positive size");
  }
  if (!(init.w >= config.min_size) || !(init.h >= config.min_size)) {
    throw std::invalid_argument("initial box is smaller than min_size");
  }

  Trajectory traj;
  traj.kind = kind;
  const Box goal = to_corner(target);
  CenterBox pred = init;
  for (std::size_t step = 0;; ++step) {
    const double overlap = iou(to_corner(pred), goal);
    traj.losses.push_back(loss(kind, pred, target));
    traj.boxes.push_back(pred);
    traj.final_iou = overlap;
    if (overlap >= config.stop_iou) {
      traj.steps_to_success = step;
      break;
    }
    if (step == config.max_steps) break;
    pred = descend(pred, target, loss_gradient(kind, pred, target), config);
  }
  return traj;
}

KindSummary summarize(const std::vector<CaseRecord>& cases, LossKind kind, CaseSubset subset) {
  KindSummary s;
  std::vector<double> steps;
  double loss_sum = 0.0;
  for (const auto& c : cases) {
    if (subset == CaseSubset::DisjointStart && !c.disjoint_start) continue;
    if (subset == CaseSubset::OverlappingStart && c.disjoint_start) continue;
    ++s.cases;
    const auto& reached = kind == LossKind::IoU ? c.steps_iou : c.steps_diou;
    loss_sum += kind == LossKind::IoU ? c.final_loss_iou : c.final_loss_diou;
    if (reached) steps.push_back(static_cast<double>(*reached));
  }
  if (s.cases == 0) return s;

  s.successes = steps.size();
  s.success_rate = static_cast<double>(s.successes) / static_cast<double>(s.cases);
  s.mean_final_loss = loss_sum / static_cast<double>(s.cases);
  if (!steps.empty()) {
    std::sort(steps.begin(), steps.end());
    const std::size_t mid = steps.size() / 2;
    s.median_steps = steps.size() % 2 == 1 ? steps[mid] : 0.5 * (steps[mid - 1] + steps[mid]);
    s.mean_steps = std::accumulate(steps.begin(), steps.end(), 0.0) / static_cast<double>(steps.size());
  }
  return s;
}

CaseGenerator::CaseGenerator(const SimConfig& config) : config_(config), engine_(config.seed) {
  config_.validate();
}

double CaseGenerator::uniform(double lo, double hi) {
  // 53 random bits mapped onto [0, 1); spelled out so draws do not depend on
  // the standard library's distribution implementation.
  const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

CenterBox CaseGenerator::draw_box() {
  CenterBox b;
  b.cx = uniform(0.0, config_.canvas);
  b.cy = uniform(0.0, config_.canvas);
  b.w = uniform(config_.min_size, 0.5 * config_.canvas);
  b.h = uniform(config_.min_size, 0.5 * config_.canvas);
  return b;
}

std::pair<CenterBox, CenterBox> CaseGenerator::next() {
  for (int attempt = 0; attempt < kMaxDrawsPerCase; ++attempt) {
    const CenterBox init = draw_box();
    const CenterBox target = draw_box();
    const bool disjoint = iou(to_corner(init), to_corner(target)) == 0.0;
    if (config_.start_filter == StartFilter::DisjointOnly && !disjoint) continue;
    if (config_.start_filter == StartFilter::OverlappingOnly && disjoint) continue;
    return {init, target};
  }
  throw std::runtime_error("start filter rejected every generated case");
}

BenchmarkResult run_benchmark(const SimConfig& config) {
  config.validate();
  BenchmarkResult result;
  result.config = config;
  result.cases.reserve(config.case_count);

  CaseGenerator gen(config);
  for (std::size_t i = 0; i < config.case_count; ++i) {
    const auto [init, target] = gen.next();
    const Trajectory a = run_case(init, target, LossKind::IoU, config);
    const Trajectory b = run_case(init, target, LossKind::DIoU, config);

    CaseRecord rec;
    rec.index = i;
    rec.init = init;
    rec.target = target;
    rec.disjoint_start = iou(to_corner(init), to_corner(target)) == 0.0;
    rec.initial_loss_iou = a.losses.front();
    rec.initial_loss_diou = b.losses.front();
    rec.steps_iou = a.steps_to_success;
    rec.steps_diou = b.steps_to_success;
    rec.final_loss_iou = a.final_loss();
    rec.final_loss_diou = b.final_loss();
    result.cases.push_back(rec);
  }
  return result;
}

std::string export_curves(const Trajectory& iou_run, const Trajectory& diou_run) {
  if (iou_run.losses.empty() || diou_run.losses.empty()) {
    throw std::invalid_argument("export_curves needs non-empty trajectories");
  }
  const std::size_t rows = std::max(iou_run.losses.size(), diou_run.losses.size());
  std::string out = "step,loss_iou,loss_diou\n";
  for (std::size_t i = 0; i < rows; ++i) {
    const double a = iou_run.losses[std::min(i, iou_run.losses.size() - 1)];
    const double b = diou_run.losses[std::min(i, diou_run.losses.size() - 1)];
    out += std::to_string(i) + ',' + fixed6(a) + ',' + fixed6(b) + '\n';
  }
  return out;
}

std::string export_case_table(const std::vector<CaseRecord>& cases) {
  auto steps = [](const std::optional<std::size_t>& s) {
    return s ? std::to_string(*s) : std::string("NA");
  };
  auto box = [](const CenterBox& b) {
    return fixed6(b.cx) + ',' + fixed6(b.cy) + ',' + fixed6(b.w) + ',' + fixed6(b.h);
  };
  std::string out =
      "case,init_cx,init_cy,init_w,init_h,target_cx,target_cy,target_w,target_h,disjoint_start,"
      "steps_iou,steps_diou,initial_loss_iou,initial_loss_diou,final_loss_iou,final_loss_diou\n";
  for (const auto& c : cases) {
    out += std::to_string(c.index) + ',' + box(c.init) + ',' + box(c.target) + ',' +
           (c.disjoint_start ? "1" : "0") + ',' +
           steps(c.steps_iou) + ',' + steps(c.steps_diou) + ',' + fixed6(c.initial_loss_iou) + ',' +
           fixed6(c.initial_loss_diou) + ',' + fixed6(c.final_loss_iou) + ',' +
           fixed6(c.final_loss_diou) + '\n';
  }
  return out;
}

std::string summary_json(const BenchmarkResult& result) {
  auto kind_json = [](const KindSummary& s) {
    nlohmann::ordered_json j;
    j["cases"] = s.cases;
    j["successes"] = s.successes;
    j["success_rate"] = s.success_rate;
    j["median_steps"] = s.median_steps ? nlohmann::ordered_json(*s.median_steps) : nlohmann::ordered_json(nullptr);
    j["mean_steps"] = s.mean_steps ? nlohmann::ordered_json(*s.mean_steps) : nlohmann::ordered_json(nullptr);
    j["mean_final_loss"] = s.mean_final_loss;
    return j;
  };

  nlohmann::ordered_json doc;
  const SimConfig& cfg = result.config;
  doc["config"] = {{"cases", cfg.case_count},          {"seed", cfg.seed},
                   {"learning_rate", cfg.learning_rate}, {"max_steps", cfg.max_steps},
                   {"stop_iou", cfg.stop_iou},           {"canvas", cfg.canvas},
                   {"min_size", cfg.min_size},           {"scaling", std::string(to_string(cfg.scaling))}};
  for (const LossKind kind : {LossKind::IoU, LossKind::DIoU}) {
    nlohmann::ordered_json k;
    k["all"] = kind_json(result.summary(kind));
    k["disjoint_start"] = kind_json(result.summary(kind, CaseSubset::DisjointStart));
    k["overlapping_start"] = kind_json(result.summary(kind, CaseSubset::OverlappingStart));
    doc[std::string(to_string(kind))] = k;
  }
  return doc.dump(2);
}

}  // namespace detgeom
