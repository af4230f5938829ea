#include "detgeom/evaluation.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "detgeom/dataset_io.hpp"
#include "support/oracles.hpp"

namespace detgeom {
namespace {

const std::filesystem::path kFixtures{DETGEOM_FIXTURE_DIR};

Detection det(std::string image, double x1, double y1, double x2, double y2, double score) {
  return {std::move(image), Box(x1, y1, x2, y2), score, kDefaultClassName};
}

GroundTruth gt(std::string image, double x1, double y1, double x2, double y2) {
  return {std::move(image), Box(x1, y1, x2, y2), kDefaultClassName};
}

TEST(MatchImage, SingleOverlap) {
  // IoU 60/100 = 0.6.
  const std::vector<Detection> d{det("i", 0, 0, 10, 6, 0.9)};
  const std::vector<GroundTruth> g{gt("i", 0, 0, 10, 10)};
  const MatchResult m = match_image(d, g, 0.5);
  EXPECT_EQ(m.true_positives(), 1U);
  EXPECT_EQ(m.false_positives(), 0U);
  EXPECT_EQ(m.false_negatives, 0U);
  EXPECT_DOUBLE_EQ(m.matched_iou[0], 0.6);
}

TEST(MatchImage, DuplicateDetection) {
  const std::vector<Detection> d{det("i", 0, 0, 10, 9, 0.6), det("i", 0, 0, 10, 10, 0.8)};
  const std::vector<GroundTruth> g{gt("i", 0, 0, 10, 10)};
  const MatchResult m = match_image(d, g, 0.5);
  EXPECT_EQ(m.outcomes, (std::vector<Outcome>{Outcome::FalsePositive, Outcome::TruePositive}));
  EXPECT_EQ(m.false_negatives, 0U);
  EXPECT_EQ(m.matched_iou[0], 0.0);
}

TEST(MatchImage, NoDetections) {
  const std::vector<GroundTruth> g{gt("i", 0, 0, 1, 1), gt("i", 2, 2, 3, 3), gt("i", 4, 4, 5, 5)};
  const MatchResult m = match_image({}, g, 0.5);
  EXPECT_EQ(m.true_positives(), 0U);
  EXPECT_EQ(m.false_positives(), 0U);
  EXPECT_EQ(m.false_negatives, 3U);
}

TEST(MatchImage, ClassesAndErrors) {
  std::vector<Detection> d{det("i", 0, 0, 10, 10, 0.9)};
  d[0].class_name = "car";
  const std::vector<GroundTruth> g{gt("i", 0, 0, 10, 10)};
  EXPECT_EQ(match_image(d, g, 0.5).true_positives(), 0U);

  const std::vector<Detection> mixed{det("i", 0, 0, 1, 1, 0.9), det("j", 0, 0, 1, 1, 0.9)};
  EXPECT_THROW(match_image(mixed, {}, 0.5), std::invalid_argument);
  const std::vector<GroundTruth> other{gt("j", 0, 0, 1, 1)};
  EXPECT_THROW(match_image(std::span(mixed).first(1), other, 0.5), std::invalid_argument);
}

TEST(PrecisionRecall, Examples) {
  EXPECT_NEAR(precision(347, 69), 0.8341, 1e-4);
  EXPECT_NEAR(precision(261, 12), 0.9560, 1e-4);
  EXPECT_EQ(precision(0, 0), 1.0);
  EXPECT_EQ(recall(0, 5), 0.0);
  EXPECT_EQ(recall(5, 0), 1.0);
  EXPECT_EQ(recall(3, 1), 0.75);
  EXPECT_EQ(recall(0, 0), 1.0);
}

TEST(PrCurve, Examples) {
  EXPECT_TRUE(pr_curve({}, 3).empty());

  const std::vector<ScoredOutcome> one{{0.9, true}};
  const auto c1 = pr_curve(one, 1);
  ASSERT_EQ(c1.size(), 1U);
  EXPECT_EQ(c1[0].precision, 1.0);
  EXPECT_EQ(c1[0].recall, 1.0);

  const std::vector<ScoredOutcome> tp_first{{0.8, false}, {0.9, true}};
  const auto c2 = pr_curve(tp_first, 1);
  ASSERT_EQ(c2.size(), 2U);
  EXPECT_EQ(c2[0].score_threshold, 0.9);
  EXPECT_EQ(c2[0].precision, 1.0);
  EXPECT_EQ(c2[1].precision, 0.5);
  EXPECT_EQ(c2[1].recall, 1.0);

  const std::vector<ScoredOutcome> fp_first{{0.9, false}, {0.8, true}};
  const auto c3 = pr_curve(fp_first, 1);
  EXPECT_EQ(c3[0].precision, 0.0);
  EXPECT_EQ(c3[0].recall, 0.0);
  EXPECT_EQ(c3[1].precision, 0.5);
  EXPECT_EQ(c3[1].recall, 1.0);
}

TEST(AveragePrecision, Examples) {
  const std::vector<PRPoint> single{{0.9, 1.0, 1.0}};
  EXPECT_EQ(average_precision(single, ApMethod::AllPoint), 1.0);
  EXPECT_EQ(average_precision(single, ApMethod::ElevenPoint), 1.0);
  const std::vector<PRPoint> tail{{0.9, 1.0, 1.0}, {0.8, 0.5, 1.0}};
  EXPECT_EQ(average_precision(tail, ApMethod::AllPoint), 1.0);
  const std::vector<PRPoint> late{{0.9, 0.0, 0.0}, {0.8, 0.5, 1.0}};
  EXPECT_EQ(average_precision(late, ApMethod::AllPoint), 0.5);
  EXPECT_EQ(average_precision({}, ApMethod::AllPoint), 0.0);
  EXPECT_EQ(average_precision({}, ApMethod::ElevenPoint), 0.0);
  EXPECT_EQ(parse_ap_method("elevenpoint"), ApMethod::ElevenPoint);
  EXPECT_EQ(to_string(ApMethod::AllPoint), "allpoint");
  EXPECT_THROW(parse_ap_method("voc"), std::invalid_argument);
}

DatasetIndex index_of(const std::vector<GroundTruth>& gts, const std::vector<std::string>& images) {
  DatasetIndex index;
  for (const auto& image : images) {
    std::vector<GroundTruth> mine;
    for (const auto& g : gts)
      if (g.image_id == image) mine.push_back(g);
    index.add_image(image, std::move(mine));
  }
  return index;
}

TEST(Evaluate, EmptyDetections) {
  const DatasetIndex index = index_of({gt("a", 0, 0, 1, 1), gt("b", 0, 0, 1, 1)}, {"a", "b"});
  const EvalReport r = evaluate(index, {});
  EXPECT_EQ(r.tp, 0U);
  EXPECT_EQ(r.fp, 0U);
  EXPECT_EQ(r.fn, 2U);
  EXPECT_EQ(r.ap, 0.0);
}

TEST(Evaluate, PerfectDetections) {
  const std::vector<GroundTruth> gts{gt("a", 0, 0, 1, 1), gt("b", 0, 0, 1, 1), gt("b", 5, 5, 9, 9)};
  std::vector<Detection> dets;
  for (const auto& g : gts) dets.push_back({g.image_id, g.box, 1.0, g.class_name});
  const EvalReport r = evaluate(index_of(gts, {"a", "b"}), dets);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_EQ(r.ap, 1.0);
}

TEST(Evaluate, ThreeImageFixture) {
  const DatasetIndex index = load_dataset(kFixtures / "eval3" / "gt");
  const auto dets = load_detections(kFixtures / "eval3" / "detections.jsonl");
  const EvalReport r = evaluate(index, dets);
  EXPECT_EQ(r.predicted_count, 6U);
  EXPECT_EQ(r.total_gt, 5U);
  EXPECT_EQ(r.tp, 4U);
  EXPECT_EQ(r.fp, 2U);
  EXPECT_EQ(r.fn, 1U);
  EXPECT_DOUBLE_EQ(r.precision, 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(r.recall, 0.8);
  // Ranked TP/FP: T T F T F T; envelope at the TPs: 1, 1, 3/4, 2/3.
  EXPECT_NEAR(r.ap, 41.0 / 60.0, 1e-12);
  // Envelope at recall 0..0.4 is 1, 0.5..0.6 is 3/4, 0.7..0.8 is 2/3, above 0.
  EXPECT_NEAR(evaluate(index, dets, 0.5, ApMethod::ElevenPoint).ap, 47.0 / 66.0, 1e-12);

  ASSERT_EQ(r.pr_curve.size(), 6U);
  EXPECT_EQ(pr_curve_table(r.pr_curve),
            "score,precision,recall\n"
            "0.900000,1.000000,0.200000\n"
            "0.800000,1.000000,0.400000\n"
            "0.700000,0.666667,0.400000\n"
            "0.600000,0.750000,0.600000\n"
            "0.500000,0.600000,0.600000\n"
            "0.400000,0.666667,0.800000\n");
}

TEST(Evaluate, UnknownImagesAreFalsePositives) {
  const DatasetIndex index = index_of({gt("a", 0, 0, 10, 10)}, {"a"});
  const std::vector<Detection> dets{det("a", 0, 0, 10, 10, 0.5), det("ghost", 0, 0, 10, 10, 0.9)};
  const EvalReport r = evaluate(index, dets);
  EXPECT_EQ(r.tp, 1U);
  EXPECT_EQ(r.fp, 1U);
  EXPECT_EQ(r.unknown_image_detections, 1U);
  EXPECT_DOUBLE_EQ(r.ap, 0.5);
}

TEST(ReportJson, Fields) {
  const DatasetIndex index = index_of({gt("a", 0, 0, 10, 10)}, {"a"});
  const std::vector<Detection> dets{det("a", 0, 0, 10, 10, 0.5)};
  const std::string j = report_json(evaluate(index, dets));
  for (const char* key : {"\"predicted_count\"", "\"tp\"", "\"fp\"", "\"fn\"", "\"ap\"", "\"precision\"",
                          "\"recall\""}) {
    EXPECT_NE(j.find(key), std::string::npos) << key;
  }
}

struct RandomDataset {
  std::vector<std::string> images;
  std::vector<GroundTruth> gts;
  std::vector<Detection> dets;
};

// Small worlds: at most 3 objects and 5 detections per image, coarse scores
// so ties occur, detections jittered around objects so IoUs straddle 0.5.
RandomDataset random_dataset(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> image_count(1, 4), gt_count(0, 3), det_count(0, 5), score(0, 10);
  std::uniform_real_distribution<double> pos(0.0, 60.0), size(5.0, 20.0), jitter(-4.0, 4.0);
  std::bernoulli_distribution near(0.75);
  RandomDataset ds;
  const int n_images = image_count(rng);
  for (int i = 0; i < n_images; ++i) {
    const std::string id = "im" + std::to_string(i);
    ds.images.push_back(id);
    std::vector<Box> boxes;
    for (int k = gt_count(rng); k > 0; --k) {
      const double x = pos(rng), y = pos(rng);
      boxes.emplace_back(x, y, x + size(rng), y + size(rng));
      ds.gts.push_back({id, boxes.back(), kDefaultClassName});
    }
    for (int k = det_count(rng); k > 0; --k) {
      Box b = [&] {
        const double x = pos(rng), y = pos(rng);
        return Box(x, y, x + size(rng), y + size(rng));
      }();
      if (!boxes.empty() && near(rng)) {
        const Box& base = boxes[std::uniform_int_distribution<std::size_t>(0, boxes.size() - 1)(rng)];
        const double dx = jitter(rng), dy = jitter(rng);
        b = Box(base.x1() + dx, base.y1() + dy, base.x2() + dx + jitter(rng) / 2,
                base.y2() + dy + jitter(rng) / 2);
      }
      ds.dets.push_back({id, b, score(rng) / 10.0, kDefaultClassName});
    }
  }
  return ds;
}

testing::RefReport oracle(const RandomDataset& ds, double threshold) {
  std::vector<testing::RefDet> d;
  for (const auto& x : ds.dets)
    d.push_back({x.image_id, x.box.x1(), x.box.y1(), x.box.x2(), x.box.y2(), x.score});
  std::vector<testing::RefGt> g;
  for (const auto& x : ds.gts) g.push_back({x.image_id, x.box.x1(), x.box.y1(), x.box.x2(), x.box.y2()});
  return testing::brute_force_eval(d, g, threshold);
}

TEST(EvaluationProperties, MatchesBruteForceOracle) {
  std::mt19937_64 rng(101);
  for (int i = 0; i < 2000; ++i) {
    const RandomDataset ds = random_dataset(rng);
    const DatasetIndex index = index_of(ds.gts, ds.images);
    const testing::RefReport ref = oracle(ds, 0.5);
    const EvalReport all = evaluate(index, ds.dets, 0.5, ApMethod::AllPoint);
    const EvalReport eleven = evaluate(index, ds.dets, 0.5, ApMethod::ElevenPoint);
    ASSERT_EQ(all.tp, ref.tp) << "dataset " << i;
    ASSERT_EQ(all.fp, ref.fp) << "dataset " << i;
    ASSERT_EQ(all.fn, ref.fn) << "dataset " << i;
    ASSERT_NEAR(all.ap, ref.ap_all_point, 1e-12) << "dataset " << i;
    ASSERT_NEAR(eleven.ap, ref.ap_eleven_point, 1e-12) << "dataset " << i;
  }
}

TEST(EvaluationProperties, ConservationRankInvarianceAndEnvelope) {
  std::mt19937_64 rng(202);
  for (int i = 0; i < 2000; ++i) {
    RandomDataset ds = random_dataset(rng);
    const DatasetIndex index = index_of(ds.gts, ds.images);
    const EvalReport r = evaluate(index, ds.dets);
    EXPECT_EQ(r.tp + r.fp, r.predicted_count);
    EXPECT_EQ(r.tp + r.fn, r.total_gt);
    EXPECT_GE(r.ap, 0.0);
    EXPECT_LE(r.ap, 1.0);

    for (std::size_t k = 1; k < r.pr_curve.size(); ++k) {
      EXPECT_GE(r.pr_curve[k].recall, r.pr_curve[k - 1].recall);
    }

    double trapezoid = 0.0;
    double prev_r = 0.0;
    double prev_p = r.pr_curve.empty() ? 0.0 : r.pr_curve.front().precision;
    for (const auto& p : r.pr_curve) {
      trapezoid += (p.recall - prev_r) * 0.5 * (p.precision + prev_p);
      prev_r = p.recall;
      prev_p = p.precision;
    }
    if (r.total_gt > 0) EXPECT_GE(r.ap + 1e-12, trapezoid);

    RandomDataset shifted = ds;
    for (auto& d : shifted.dets) d.score = 0.05 + 0.9 * d.score * d.score * d.score;
    EXPECT_EQ(evaluate(index, shifted.dets).ap, r.ap);
    EXPECT_EQ(evaluate(index, shifted.dets, 0.5, ApMethod::ElevenPoint).ap,
              evaluate(index, ds.dets, 0.5, ApMethod::ElevenPoint).ap);
  }
}

TEST(EvaluationProperties, RaisingIouThresholdNeverAddsTruePositives) {
  std::mt19937_64 rng(303);
  for (int i = 0; i < 1000; ++i) {
    const RandomDataset ds = random_dataset(rng);
    const DatasetIndex index = index_of(ds.gts, ds.images);
    std::size_t previous = ds.dets.size();
    for (const double t : {0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95, 1.0}) {
      const std::size_t tp = evaluate(index, ds.dets, t).tp;
      EXPECT_LE(tp, previous) << "dataset " << i << " threshold " << t;
      previous = tp;
    }
  }
}

}  // namespace
}  // namespace detgeom
