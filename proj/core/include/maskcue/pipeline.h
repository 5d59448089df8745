// End-to-end commands over a work directory.
//
// Work directory layout:
//   features/<kind>/<utt_id>.feat   binary feature matrix
//   features/<kind>/<utt_id>.key    cache key (WAV content hash + config)
//   models/<kind>.gmm               mask / no_mask GMM pair
//   models/fusion.txt               logistic-regression fusion weights
//   scores/<system>_<partition>.scores and .pred
//   reports/uar_table.txt
//
// Each command returns a process exit status: 0 on success, 1 on I/O
// failure, 2 on invalid input or missing upstream artifacts. Diagnostics go
// to `err`, progress to `out`. A work directory supports one writer at a time.

#ifndef MASKCUE_PIPELINE_H_
#define MASKCUE_PIPELINE_H_

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>

#include "maskcue/config.h"
#include "maskcue/corpus.h"
#include "maskcue/features.h"

namespace maskcue {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitValidation = 2;

struct WorkLayout {
  std::filesystem::path root;

  std::filesystem::path features_dir(FeatureKind kind) const;
  std::filesystem::path feature_file(FeatureKind kind, const std::string& utt_id) const;
  std::filesystem::path feature_key(FeatureKind kind, const std::string& utt_id) const;
  std::filesystem::path model_file(FeatureKind kind) const;
  std::filesystem::path fusion_model_file() const;
  std::filesystem::path scores_file(const std::string& system, Partition p) const;
  std::filesystem::path predictions_file(const std::string& system, Partition p) const;
  std::filesystem::path report_file() const;
};

/// 64-bit FNV-1a.
std::uint64_t content_hash(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Runs `body`, mapping ValidationError to 2 and IoError / other failures
/// to 1, printing "error: <message>" to `err`.
int run_guarded(std::ostream& err, const std::function<int()>& body);

struct ExtractSummary {
  int written = 0;
  int skipped = 0;
  int failed = 0;
};

int cmd_synth(const PipelineConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out,
              std::ostream& err);

/// Extracts every manifest entry. `kind` empty means every configured system.
int cmd_extract(const PipelineConfig& cfg, std::optional<FeatureKind> kind, std::ostream& out,
                std::ostream& err, ExtractSummary* summary = nullptr);

int cmd_train(const PipelineConfig& cfg, std::optional<FeatureKind> kind, std::ostream& out,
              std::ostream& err);

/// Scores the dev and (if present) test partitions.
int cmd_score(const PipelineConfig& cfg, std::optional<FeatureKind> kind, std::ostream& out,
              std::ostream& err);

/// Trains fusion on dev scores of all configured systems, applies it to dev
/// and test.
int cmd_fuse(const PipelineConfig& cfg, std::ostream& out, std::ostream& err);

/// Prints the UAR table and writes it to reports/uar_table.txt.
int cmd_eval(const PipelineConfig& cfg, std::ostream& out, std::ostream& err);

enum class RenderKind { kSpectrogram, kPyknogram };
RenderKind parse_render_kind(std::string_view name);

int cmd_render(const PipelineConfig& cfg, const std::filesystem::path& input_wav, RenderKind kind,
               const std::filesystem::path& out_path, std::ostream& out, std::ostream& err);

}  // namespace maskcue

#endif  // MASKCUE_PIPELINE_H_
