// Pipeline configuration: one INI-style file with a section per module.
//
//   [paths]    corpus_root, work_dir, manifest
//   [synth]    n_speakers, utts_per_speaker, n_test_speakers, blind_test,
//              duration_s, seed, attenuation_db_at_8khz, tilt_start_hz,
//              additive_noise_db
//   [features] delta_window
//   [lfcc] [mfcc]  frame_ms, hop_ms, n_fft, n_filters, fmin_hz, fmax_hz,
//              n_ceps, pre_emphasis, pre_emphasis_coeff
//   [ifcc]     frame_ms, hop_ms, n_subbands, fmin_hz, fmax_hz, n_ceps,
//              denominator_floor
//   [cqcc]     frame_ms, hop_ms, bins_per_octave, fmin_hz, fmax_hz,
//              resample_period, n_ceps
//   [gmm]      n_components, seed, max_iters, tol, floor_scale, kmeans_iters
//   [fusion]   l2, max_iters, tol, systems (comma separated)
//   [viz]      width, height, dynamic_range_db, amp_threshold_ratio, n_fft
//
// Unknown sections or keys are rejected. Relative paths resolve against the
// directory of the config file.

#ifndef MASKCUE_CONFIG_H_
#define MASKCUE_CONFIG_H_

#include <filesystem>
#include <string>
#include <vector>

#include "maskcue/corpus.h"
#include "maskcue/features.h"
#include "maskcue/fusion.h"
#include "maskcue/gmm.h"
#include "maskcue/viz.h"

namespace maskcue {

struct PipelineConfig {
  std::filesystem::path corpus_root = "corpus";
  std::filesystem::path work_dir = "work";
  std::filesystem::path manifest = "corpus/manifest.tsv";

  SynthConfig synth;
  FeatureConfig features;
  GmmConfig gmm;
  FusionConfig fusion;
  std::vector<FeatureKind> systems{kAllFeatureKinds.begin(), kAllFeatureKinds.end()};

  RenderStyle render;
  SpectrogramConfig spectrogram;
  PyknogramConfig pyknogram;
};

/// `base_dir` anchors relative paths.
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
/// Every key with its current value, in the file syntax.
std::string format_config(const PipelineConfig& cfg);

/// Range checks; throws ValidationError naming the key.
void validate(const PipelineConfig& cfg);

/// Stable text identifying everything that affects one feature kind's output.
std::string feature_fingerprint(FeatureKind kind, const FeatureConfig& cfg);
std::string gmm_fingerprint(const GmmConfig& cfg);

}  // namespace maskcue

#endif  // MASKCUE_CONFIG_H_
