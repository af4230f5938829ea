#include "detgeom/convergence.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

namespace detgeom {
namespace {

const CenterBox kLeft = to_center(Box(0, 0, 1, 1));
const CenterBox kRight = to_center(Box(2, 0, 3, 1));

SimConfig with_lr(double lr, StepScaling scaling = StepScaling::EnclosingExtent) {
  SimConfig c;
  c.learning_rate = lr;
  c.scaling = scaling;
  return c;
}

TEST(SimConfig, Validation) {
  SimConfig c;
  EXPECT_NO_THROW(c.validate());
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SimConfig{};
  c.stop_iou = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SimConfig{};
  c.min_size = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(parse_step_scaling("plain"), StepScaling::Plain);
  EXPECT_EQ(to_string(StepScaling::EnclosingExtent), "enclosing");
  EXPECT_THROW(parse_step_scaling("adam"), std::invalid_argument);
}

TEST(RunCase, IdentityConvergesImmediately) {
  const CenterBox b{50, 50, 10, 20};
  for (const LossKind kind : {LossKind::IoU, LossKind::DIoU}) {
    const Trajectory t = run_case(b, b, kind, SimConfig{});
    ASSERT_TRUE(t.steps_to_success.has_value());
    EXPECT_EQ(*t.steps_to_success, 0U);
    EXPECT_EQ(t.losses, std::vector<double>{0.0});
    EXPECT_EQ(t.final_iou, 1.0);
  }
}

TEST(RunCase, DisjointIouStalls) {
  SimConfig c;
  c.max_steps = 200;
  for (const StepScaling s : {StepScaling::Plain, StepScaling::EnclosingExtent}) {
    c.scaling = s;
    const Trajectory t = run_case(kLeft, kRight, LossKind::IoU, c);
    EXPECT_FALSE(t.steps_to_success.has_value());
    EXPECT_EQ(t.losses.size(), 201U);
    for (std::size_t i = 0; i < t.losses.size(); ++i) {
      EXPECT_EQ(t.losses[i], 1.0);
      EXPECT_EQ(t.boxes[i], kLeft);
    }
  }
}

TEST(RunCase, FrozenDisjointRegression) {
  // Step counts from tests/support/descent_recurrence.py.
  const Trajectory plain = run_case(kLeft, kRight, LossKind::DIoU, with_lr(0.5, StepScaling::Plain));
  ASSERT_TRUE(plain.steps_to_success.has_value());
  EXPECT_EQ(*plain.steps_to_success, 29U);

  const Trajectory scaled = run_case(kLeft, kRight, LossKind::DIoU, with_lr(0.5));
  ASSERT_TRUE(scaled.steps_to_success.has_value());
  EXPECT_EQ(*scaled.steps_to_success, 15U);

  const Trajectory fine = run_case(kLeft, kRight, LossKind::DIoU, with_lr(0.02));
  ASSERT_TRUE(fine.steps_to_success.has_value());
  EXPECT_EQ(*fine.steps_to_success, 73U);
  EXPECT_GE(fine.final_iou, 0.9);
  EXPECT_EQ(fine.losses.size(), 74U);
}

TEST(RunCase, PlainStepIsLiteralGradientDescent) {
  SimConfig c = with_lr(0.5, StepScaling::Plain);
  c.max_steps = 1;
  const Trajectory t = run_case(kLeft, kRight, LossKind::DIoU, c);
  ASSERT_EQ(t.boxes.size(), 2U);
  const BoxGradient g = loss_gradient(LossKind::DIoU, kLeft, kRight);
  EXPECT_DOUBLE_EQ(t.boxes[1].cx, kLeft.cx - 0.5 * g.d_cx);
  EXPECT_DOUBLE_EQ(t.boxes[1].w, kLeft.w - 0.5 * g.d_w);
}

TEST(RunCase, SizeFloor) {
  SimConfig c = with_lr(50.0, StepScaling::Plain);
  c.max_steps = 3;
  const Trajectory t = run_case(CenterBox{50, 50, 40, 40}, CenterBox{50, 50, 2, 2}, LossKind::IoU, c);
  for (const auto& b : t.boxes) {
    EXPECT_GE(b.w, c.min_size);
    EXPECT_GE(b.h, c.min_size);
  }
}

TEST(RunCase, Preconditions) {
  EXPECT_THROW(run_case(kLeft, CenterBox{1, 1, 0, 1}, LossKind::DIoU, SimConfig{}), std::invalid_argument);
  EXPECT_THROW(run_case(CenterBox{1, 1, 0.5, 1}, kRight, LossKind::DIoU, SimConfig{}), std::invalid_argument);
}

TEST(RunBenchmark, ZeroCases) {
  SimConfig c;
  c.case_count = 0;
  const BenchmarkResult r = run_benchmark(c);
  EXPECT_TRUE(r.cases.empty());
  const KindSummary s = r.summary(LossKind::DIoU);
  EXPECT_EQ(s.cases, 0U);
  EXPECT_EQ(s.successes, 0U);
  EXPECT_FALSE(s.median_steps.has_value());
}

TEST(RunBenchmark, DisjointStartsOnly) {
  SimConfig c;
  c.case_count = 200;
  c.start_filter = StartFilter::DisjointOnly;
  const BenchmarkResult r = run_benchmark(c);
  ASSERT_EQ(r.cases.size(), 200U);
  for (const auto& rec : r.cases) EXPECT_TRUE(rec.disjoint_start);
  EXPECT_EQ(r.summary(LossKind::IoU).success_rate, 0.0);
  EXPECT_EQ(r.summary(LossKind::DIoU).success_rate, 1.0);
}

TEST(RunBenchmark, DeterministicAndPaired) {
  SimConfig c;
  c.case_count = 100;
  c.seed = 9;
  const BenchmarkResult a = run_benchmark(c);
  const BenchmarkResult b = run_benchmark(c);
  EXPECT_EQ(export_case_table(a.cases), export_case_table(b.cases));
  EXPECT_EQ(summary_json(a), summary_json(b));

  CaseGenerator gen(c);
  for (const auto& rec : a.cases) {
    const auto [init, target] = gen.next();
    EXPECT_EQ(rec.init, init);
    EXPECT_EQ(rec.target, target);
    EXPECT_EQ(rec.initial_loss_iou, loss(LossKind::IoU, init, target));
    EXPECT_EQ(rec.initial_loss_diou, loss(LossKind::DIoU, init, target));
    EXPECT_GE(rec.initial_loss_diou, rec.initial_loss_iou);
    EXPECT_GE(init.w, c.min_size);
    EXPECT_LE(init.w, c.canvas / 2);
    EXPECT_GE(target.cx, 0.0);
    EXPECT_LE(target.cx, c.canvas);
  }

  c.seed = 10;
  EXPECT_NE(export_case_table(run_benchmark(c).cases), export_case_table(a.cases));
}

TEST(Summarize, MedianAndSubsets) {
  std::vector<CaseRecord> cases(4);
  cases[0].steps_diou = 10;
  cases[1].steps_diou = 30;
  cases[2].steps_diou = 20;
  cases[2].disjoint_start = true;
  cases[3].final_loss_diou = 0.8;
  const KindSummary all = summarize(cases, LossKind::DIoU);
  EXPECT_EQ(all.cases, 4U);
  EXPECT_EQ(all.successes, 3U);
  EXPECT_DOUBLE_EQ(all.success_rate, 0.75);
  EXPECT_EQ(all.median_steps, 20.0);
  EXPECT_EQ(all.mean_steps, 20.0);
  EXPECT_DOUBLE_EQ(all.mean_final_loss, 0.2);
  const KindSummary overlap = summarize(cases, LossKind::DIoU, CaseSubset::OverlappingStart);
  EXPECT_EQ(overlap.cases, 3U);
  EXPECT_EQ(overlap.median_steps, 20.0);
  EXPECT_EQ(summarize(cases, LossKind::DIoU, CaseSubset::DisjointStart).median_steps, 20.0);
}

TEST(ExportCurves, Formats) {
  const CenterBox b{5, 5, 2, 2};
  const Trajectory ti = run_case(b, b, LossKind::IoU, SimConfig{});
  const Trajectory td = run_case(b, b, LossKind::DIoU, SimConfig{});
  EXPECT_EQ(export_curves(ti, td), "step,loss_iou,loss_diou\n0,0.000000,0.000000\n");

  const Trajectory si = run_case(kLeft, kRight, LossKind::IoU, SimConfig{});
  const Trajectory sd = run_case(kLeft, kRight, LossKind::DIoU, SimConfig{});
  std::istringstream rows(export_curves(si, sd));
  std::string line;
  std::getline(rows, line);
  std::size_t count = 0;
  while (std::getline(rows, line)) {
    EXPECT_EQ(line.substr(line.find(',') + 1, 9), "1.000000,") << line;
    ++count;
  }
  EXPECT_EQ(count, std::max(si.losses.size(), sd.losses.size()));
}

TEST(ExportCurves, OverlappingStartDescends) {
  const CenterBox init{40, 45, 30, 20};
  const CenterBox target{50, 50, 25, 30};
  const Trajectory ti = run_case(init, target, LossKind::IoU, SimConfig{});
  const Trajectory td = run_case(init, target, LossKind::DIoU, SimConfig{});
  EXPECT_LE(td.final_loss(), td.losses.front());
  std::istringstream rows(export_curves(ti, td));
  std::string line, last;
  while (std::getline(rows, line)) last = line;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", td.final_loss());
  EXPECT_EQ(last.substr(last.rfind(',') + 1), buf);
}

TEST(ExportCaseTable, MarksFailures) {
  SimConfig c;
  c.case_count = 20;
  c.max_steps = 50;
  c.start_filter = StartFilter::DisjointOnly;
  const std::string table = export_case_table(run_benchmark(c).cases);
  EXPECT_EQ(table.substr(0, table.find('\n')),
            "case,init_cx,init_cy,init_w,init_h,target_cx,target_cy,target_w,target_h,disjoint_start,"
            "steps_iou,steps_diou,initial_loss_iou,initial_loss_diou,final_loss_iou,final_loss_diou");
  EXPECT_NE(table.find(",1,NA,"), std::string::npos);
}

}  // namespace
}  // namespace detgeom
