#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "maskcue/error.h"
#include "maskcue/fusion.h"
#include "maskcue/metrics.h"

namespace maskcue {
namespace {

ConfusionMatrix from_counts(long nn, long nm, long mn, long mm) {
  ConfusionMatrix cm;
  cm.counts[0][0] = nn;
  cm.counts[0][1] = nm;
  cm.counts[1][0] = mn;
  cm.counts[1][1] = mm;
  return cm;
}

TEST(Uar, ClosedFormValues) {
  EXPECT_EQ(uar(from_counts(10, 0, 0, 7)).formatted(), "100.00");
  EXPECT_EQ(uar(from_counts(10, 0, 0, 7)).uar_percent, 100.0);

  const UarReport r = uar(from_counts(8, 2, 4, 6));
  EXPECT_EQ(r.formatted(), "70.00");
  EXPECT_EQ(r.uar_percent, 70.0);
  EXPECT_DOUBLE_EQ(r.recall_no_mask, 0.8);
  EXPECT_DOUBLE_EQ(r.recall_mask, 0.6);

  // everything predicted mask on 30/5 imbalanced truth
  EXPECT_EQ(uar(from_counts(0, 30, 0, 5)).uar_percent, 50.0);
  EXPECT_EQ(uar(from_counts(0, 30, 0, 5)).formatted(), "50.00");
}

TEST(Uar, InvariantToScalingOneTrueClass) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<long> count(0, 50);
  for (int trial = 0; trial < 200; ++trial) {
    const long a = count(rng), b = count(rng) + 1, c = count(rng), d = count(rng) + 1;
    const double base = uar(from_counts(a, b, c, d)).uar_percent;
    for (long k : {2L, 3L, 17L}) {
      EXPECT_NEAR(uar(from_counts(a * k, b * k, c, d)).uar_percent, base, 1e-12);
      EXPECT_NEAR(uar(from_counts(a, b, c * k, d * k)).uar_percent, base, 1e-12);
    }
  }
}

TEST(Uar, EmptyTrueClassIsRejected) {
  EXPECT_THROW(uar(from_counts(3, 1, 0, 0)), ValidationError);
  EXPECT_THROW(uar(from_counts(0, 0, 2, 2)), ValidationError);
  EXPECT_THROW(uar(from_counts(-1, 2, 2, 2)), ValidationError);
}

TEST(Confusion, CountsPairs) {
  const std::vector<Label> truth{Label::kMask, Label::kMask, Label::kNoMask, Label::kNoMask};
  const std::vector<Label> pred{Label::kMask, Label::kNoMask, Label::kNoMask, Label::kNoMask};
  const ConfusionMatrix cm = confusion(truth, pred);
  EXPECT_EQ(cm.counts[1][1], 1);
  EXPECT_EQ(cm.counts[1][0], 1);
  EXPECT_EQ(cm.counts[0][0], 2);
  EXPECT_EQ(cm.total(), 4);
  EXPECT_EQ(uar(cm).uar_percent, 75.0);
  EXPECT_THROW(confusion(truth, {Label::kMask}), ValidationError);
}

TEST(FormatPercent, TwoDecimals) {
  EXPECT_EQ(format_percent(66.2449), "66.24");
  EXPECT_EQ(format_percent(100.0), "100.00");
}

TEST(ResultsTable, MissingValuesAreDashes) {
  const std::string table = format_results_table(
      {{"", {{"LFCC", 91.5, std::nullopt}}}, {"Score level fusion", {{"Acoustic features", 99.0, 98.25}}}});
  EXPECT_NE(table.find("91.50"), std::string::npos);
  EXPECT_NE(table.find("-"), std::string::npos);
  EXPECT_NE(table.find("Score level fusion"), std::string::npos);
  EXPECT_NE(table.find("98.25"), std::string::npos);
}

TEST(MajorityVote, SpecExamples) {
  using L = Label;
  const auto vote = [](std::vector<L> votes) {
    std::vector<std::vector<L>> per_system;
    for (L v : votes) per_system.push_back({v});
    return majority_vote(per_system).at(0);
  };
  EXPECT_EQ(vote({L::kMask, L::kMask, L::kNoMask, L::kMask}), L::kMask);
  EXPECT_EQ(vote({L::kMask, L::kNoMask, L::kMask, L::kNoMask}), L::kNoMask);
  EXPECT_EQ(vote({L::kMask, L::kNoMask, L::kMask}), L::kMask);

  const std::vector<L> single{L::kMask, L::kNoMask, L::kNoMask, L::kMask};
  EXPECT_EQ(majority_vote({single}), single);

  EXPECT_THROW(majority_vote({}), ValidationError);
  EXPECT_THROW(majority_vote({{L::kMask}, {L::kMask, L::kNoMask}}), ValidationError);
}

ScoreTable table_from(const Matrix& scores, const std::vector<Label>& labels,
                      std::vector<std::string> systems = {}) {
  ScoreTable t;
  if (systems.empty()) {
    for (int s = 0; s < scores.cols(); ++s) systems.push_back("sys" + std::to_string(s));
  }
  t.systems = systems;
  t.scores = scores;
  for (int i = 0; i < scores.rows(); ++i) {
    t.utt_ids.push_back("u" + std::to_string(i));
    t.labels.push_back(labels[i]);
  }
  return t;
}

// Scores for a system that is right with probability `accuracy`; the sign
// carries the decision and the magnitude is a noisy confidence.
Eigen::VectorXd system_scores(const std::vector<Label>& labels, double accuracy, std::mt19937_64& rng) {
  std::bernoulli_distribution correct(accuracy);
  std::uniform_real_distribution<double> mag(0.2, 2.0);
  Eigen::VectorXd s(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double sign = labels[i] == Label::kMask ? 1.0 : -1.0;
    s(i) = (correct(rng) ? sign : -sign) * mag(rng);
  }
  return s;
}

std::vector<Label> alternating_labels(int n) {
  std::vector<Label> labels;
  for (int i = 0; i < n; ++i) labels.push_back(i % 2 ? Label::kMask : Label::kNoMask);
  return labels;
}

double decision_uar(const std::vector<ScoreRecord>& recs, const std::vector<Label>& labels) {
  std::vector<Label> pred;
  for (const auto& r : recs) pred.push_back(r.predicted);
  return uar(confusion(labels, pred)).uar_percent;
}

TEST(Fusion, ApplyArithmeticAndTies) {
  ScoreTable t = table_from(Matrix{{2.0, -1.0}, {0.0, 0.0}}, {Label::kMask, Label::kNoMask});
  FusionModel m{t.systems, Eigen::Vector2d(1.0, 1.0), 0.0};
  const auto out = apply_fusion(m, t);
  EXPECT_EQ(out[0].score, 1.0);
  EXPECT_EQ(out[0].predicted, Label::kMask);
  EXPECT_EQ(out[1].score, 0.0);
  EXPECT_EQ(out[1].predicted, Label::kNoMask);

  m.weights.setZero();
  m.bias = -1.0;
  for (const auto& r : apply_fusion(m, t)) EXPECT_EQ(r.predicted, Label::kNoMask);

  FusionModel wrong{{"other", "sys1"}, Eigen::Vector2d(1.0, 1.0), 0.0};
  EXPECT_THROW(apply_fusion(wrong, t), ValidationError);
}

TEST(Fusion, DecisionsInvariantUnderPositiveRescaling) {
  std::mt19937_64 rng(9);
  const auto labels = alternating_labels(60);
  Matrix s(60, 2);
  s.col(0) = system_scores(labels, 0.8, rng);
  s.col(1) = system_scores(labels, 0.7, rng);
  const ScoreTable t = table_from(s, labels);
  const FusionModel m{t.systems, Eigen::Vector2d(0.7, -0.3), 0.05};
  const FusionModel scaled{t.systems, m.weights * 13.0, m.bias * 13.0};
  const auto a = apply_fusion(m, t);
  const auto b = apply_fusion(scaled, t);
  for (int i = 0; i < 60; ++i) EXPECT_EQ(a[i].predicted, b[i].predicted);
}

TEST(Fusion, SingleSeparatingSystemKeepsItsDecisions) {
  std::mt19937_64 rng(1);
  const auto labels = alternating_labels(40);
  Matrix s(40, 1);
  s.col(0) = system_scores(labels, 1.0, rng);
  const ScoreTable t = table_from(s, labels);
  const FusionTrainResult r = train_fusion(t);
  EXPECT_GT(r.model.weights(0), 0.0);
  const auto fused = apply_fusion(r.model, t);
  for (int i = 0; i < 40; ++i) EXPECT_EQ(fused[i].predicted, decide(s(i, 0)));
}

// Class-conditional Gaussian scores at +-mu with unit noise; mu = 0.6745
// puts the accuracy of the sign decision at 75%.
Eigen::VectorXd gaussian_scores(const std::vector<Label>& labels, std::mt19937_64& rng) {
  std::normal_distribution<double> noise;
  Eigen::VectorXd s(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s(i) = (labels[i] == Label::kMask ? 0.6745 : -0.6745) + noise(rng);
  }
  return s;
}

TEST(Fusion, ComplementarySystemsDoNotLoseToTheBestOne) {
  std::mt19937_64 rng(2024);
  const auto labels = alternating_labels(400);
  Matrix s(400, 2);
  s.col(0) = gaussian_scores(labels, rng);
  s.col(1) = gaussian_scores(labels, rng);
  const ScoreTable t = table_from(s, labels);
  double best = 0.0;
  for (int c = 0; c < 2; ++c) {
    std::vector<Label> pred;
    for (int i = 0; i < 400; ++i) pred.push_back(decide(s(i, c)));
    best = std::max(best, uar(confusion(labels, pred)).uar_percent);
  }
  const FusionTrainResult r = train_fusion(t);
  EXPECT_GE(decision_uar(apply_fusion(r.model, t), labels), best);
}

// 400 utterances is the dev-set size of the end-to-end synthetic corpus.
TEST(Fusion, DuplicatedSystemGivesSameFusedScores) {
  std::mt19937_64 rng(2);
  const auto labels = alternating_labels(400);
  Matrix one(400, 1);
  one.col(0) = gaussian_scores(labels, rng);
  Matrix two(400, 2);
  two << one, one;
  const auto single = apply_fusion(train_fusion(table_from(one, labels)).model, table_from(one, labels));
  const auto dup = apply_fusion(train_fusion(table_from(two, labels)).model, table_from(two, labels));
  for (int i = 0; i < 400; ++i) EXPECT_NEAR(single[i].score, dup[i].score, 1e-6) << i;
}

TEST(Fusion, ObjectiveIsNonIncreasing) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const auto labels = alternating_labels(100);
    Matrix s(100, 3);
    for (int c = 0; c < 3; ++c) s.col(c) = system_scores(labels, 0.6 + 0.1 * c, rng);
    const FusionTrainResult r = train_fusion(table_from(s, labels));
    ASSERT_GE(r.objective.size(), 2u);
    for (std::size_t i = 1; i < r.objective.size(); ++i) EXPECT_LE(r.objective[i], r.objective[i - 1] + 1e-12);
  }
}

TEST(Fusion, DeterministicForFixedInput) {
  std::mt19937_64 rng(5);
  const auto labels = alternating_labels(50);
  Matrix s(50, 2);
  s.col(0) = system_scores(labels, 0.8, rng);
  s.col(1) = system_scores(labels, 0.7, rng);
  const auto a = train_fusion(table_from(s, labels)).model;
  const auto b = train_fusion(table_from(s, labels)).model;
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.bias, b.bias);
}

TEST(Fusion, RejectsDegenerateDevData) {
  const Matrix s = Matrix::Random(6, 2);
  EXPECT_THROW(train_fusion(table_from(s, std::vector<Label>(6, Label::kMask))), ValidationError);
  Matrix bad = s;
  bad(2, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(train_fusion(table_from(bad, alternating_labels(6))), ValidationError);
  ScoreTable unlabeled = table_from(s, alternating_labels(6));
  unlabeled.labels[3].reset();
  EXPECT_THROW(train_fusion(unlabeled), ValidationError);
}

TEST(ScoreTableJoin, AlignsOnUttIdAndRejectsGaps) {
  const std::vector<ScoreRecord> a{{"x", 1.0, Label::kMask}, {"y", -1.0, Label::kNoMask}};
  const std::vector<ScoreRecord> b{{"y", -2.0, Label::kNoMask}, {"x", 2.0, Label::kMask}};
  const ScoreTable t = build_score_table({{"A", a}, {"B", b}}, {{"x", Label::kMask}, {"y", Label::kNoMask}});
  EXPECT_EQ(t.utt_ids, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(t.scores(0, 1), 2.0);
  EXPECT_EQ(t.scores(1, 1), -2.0);
  EXPECT_EQ(t.labels[0], Label::kMask);

  const std::vector<ScoreRecord> missing{{"x", 2.0, Label::kMask}};
  EXPECT_THROW(build_score_table({{"A", a}, {"B", missing}}), ValidationError);
}

TEST(TextFormats, ScoresRoundTripExactly) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 100.0);
  std::vector<ScoreRecord> recs;
  for (int i = 0; i < 100; ++i) {
    const double s = g(rng);
    recs.push_back({"utt_" + std::to_string(i), s, decide(s)});
  }
  recs.push_back({"tiny", 4.9e-324, Label::kMask});
  const std::string text = format_scores(recs);
  const auto back = parse_scores(text);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].utt_id, recs[i].utt_id);
    EXPECT_EQ(back[i].score, recs[i].score);
  }
  EXPECT_EQ(format_scores(back), text);

  const auto path = std::filesystem::temp_directory_path() / "maskcue_scores_roundtrip.scores";
  write_scores(path, recs);
  EXPECT_EQ(format_scores(read_scores(path)), text);
  std::filesystem::remove(path);

  EXPECT_THROW(parse_scores("u1 1.0\n"), ValidationError);
  EXPECT_THROW(parse_scores("u1\tnot-a-number\n"), ValidationError);
}

TEST(TextFormats, PredictionsRoundTrip) {
  const std::vector<std::string> ids{"a", "b", "c"};
  const std::vector<Label> labels{Label::kMask, Label::kNoMask, Label::kMask};
  const std::string text = format_predictions(ids, labels);
  EXPECT_EQ(text, "a\tmask\nb\tno_mask\nc\tmask\n");
  const auto back = parse_predictions(text);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[1].first, "b");
  EXPECT_EQ(back[1].second, Label::kNoMask);
  EXPECT_THROW(parse_predictions("a\tmaybe\n"), ValidationError);
}

TEST(TextFormats, FusionModelRoundTrip) {
  FusionModel m{{"LFCC", "MFCC", "IFCC"}, Eigen::Vector3d(0.1, -2.5e-7, 3.0 / 7.0), -0.123456789012345678};
  const std::string text = format_fusion_model(m);
  const FusionModel back = parse_fusion_model(text);
  EXPECT_EQ(back.systems, m.systems);
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_EQ(back.bias, m.bias);
  EXPECT_EQ(format_fusion_model(back), text);

  const auto path = std::filesystem::temp_directory_path() / "maskcue_fusion_roundtrip.txt";
  write_fusion_model(path, m);
  EXPECT_EQ(format_fusion_model(read_fusion_model(path)), text);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace maskcue
