// Score-level fusion: logistic regression trained on development scores and
// applied unchanged to unseen data, plus label-level majority voting.
//
// Text formats (one record per line, tab separated):
//   scores       utt_id <TAB> score        (%.17g, round-trips exactly)
//   predictions  utt_id <TAB> mask|no_mask
//   fusion model "bias" <TAB> value, then "weight" <TAB> system <TAB> value

#ifndef MASKCUE_FUSION_H_
#define MASKCUE_FUSION_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maskcue/gmm.h"
#include "maskcue/label.h"
#include "maskcue/signal.h"

namespace maskcue {

struct ScoreTable {
  std::vector<std::string> systems;
  std::vector<std::string> utt_ids;
  Matrix scores;  // n_utts x n_systems
  std::vector<std::optional<Label>> labels;

  int n_utts() const { return static_cast<int>(utt_ids.size()); }
  int n_systems() const { return static_cast<int>(systems.size()); }
};

/// Joins per-system score lists on utt_id. Every system must score exactly
/// the same utterances; rows follow the first system's order. Labels are
/// looked up in `labels` when given.
ScoreTable build_score_table(
    const std::vector<std::pair<std::string, std::vector<ScoreRecord>>>& per_system,
    const std::map<std::string, Label>& labels = {});

struct FusionModel {
  std::vector<std::string> systems;
  Eigen::VectorXd weights;
  double bias = 0.0;
};

struct FusionConfig {
  double l2 = 1e-4;  // ridge on the weights, not the bias
  int max_iters = 100;
  double tol = 1e-12;  // relative objective decrease that ends the iteration
};

struct FusionTrainResult {
  FusionModel model;
  /// Penalised negative log-likelihood before the first and after every
  /// Newton step.
  std::vector<double> objective;
};

/// Damped Newton on sum_i softplus(z_i) - y_i z_i + (l2/2)|w|^2 with
/// z_i = w.s_i + b and y = 1 for mask.
FusionTrainResult train_fusion(const ScoreTable& dev, const FusionConfig& cfg = {});

/// Fused score w.s + b per utterance; mask iff the fused score is > 0.
std::vector<ScoreRecord> apply_fusion(const FusionModel& m, const ScoreTable& t);

/// Per utterance, the label with strictly more votes; 2-2 style ties go to
/// no_mask.
std::vector<Label> majority_vote(const std::vector<std::vector<Label>>& per_system);

std::string format_scores(const std::vector<ScoreRecord>& records);
std::vector<ScoreRecord> parse_scores(const std::string& text);
void write_scores(const std::filesystem::path& path, const std::vector<ScoreRecord>& records);
std::vector<ScoreRecord> read_scores(const std::filesystem::path& path);

std::string format_predictions(const std::vector<std::string>& utt_ids,
                               const std::vector<Label>& labels);
std::vector<std::pair<std::string, Label>> parse_predictions(const std::string& text);

std::string format_fusion_model(const FusionModel& m);
FusionModel parse_fusion_model(const std::string& text);
void write_fusion_model(const std::filesystem::path& path, const FusionModel& m);
FusionModel read_fusion_model(const std::filesystem::path& path);

}  // namespace maskcue

#endif  // MASKCUE_FUSION_H_
