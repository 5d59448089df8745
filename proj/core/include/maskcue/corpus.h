// Manifests, 1-second segmentation and a synthetic mask-effect corpus.
//
// Manifest lines: utt_id <TAB> relative_path <TAB> train|dev|test <TAB> mask|no_mask|?
// Paths resolve against the manifest's directory. "?" marks a blinded label
// and is only accepted in the test partition.

#ifndef MASKCUE_CORPUS_H_
#define MASKCUE_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "maskcue/label.h"
#include "maskcue/signal.h"

namespace maskcue {

enum class Partition { kTrain, kDev, kTest };

std::string_view partition_name(Partition p);
Partition parse_partition(std::string_view text);

struct ManifestEntry {
  std::string utt_id;
  std::string path;  // relative to Manifest::root
  Partition partition = Partition::kTrain;
  std::optional<Label> label;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path root;

  std::vector<ManifestEntry> in_partition(Partition p) const;
  std::filesystem::path resolve(const ManifestEntry& e) const { return root / e.path; }
};

/// Throws ValidationError on duplicate ids (naming the id), unlabeled
/// train/dev entries, unknown partitions and malformed lines.
Manifest parse_manifest(const std::string& text, const std::filesystem::path& root);
Manifest load_manifest(const std::filesystem::path& path);
std::string format_manifest(const Manifest& m);
void save_manifest(const std::filesystem::path& path, const Manifest& m);

/// Consecutive non-overlapping one-second pieces; a trailing remainder
/// shorter than one second is dropped.
std::vector<Waveform> segment_1s(const Waveform& w);

struct MaskFilterSpec {
  double attenuation_db_at_8khz = 6.0;
  double tilt_start_hz = 1000.0;
  double additive_noise_db = -40.0;  // white noise level relative to the clean RMS
};

/// Throws ValidationError naming the offending field.
void validate(const MaskFilterSpec& spec);

/// Gain of the tilt in dB at frequency f: 0 up to tilt_start, then falling
/// linearly in log-frequency to -attenuation at 8 kHz (and beyond).
double mask_gain_db(double f_hz, const MaskFilterSpec& spec);

/// Zero-phase spectral tilt followed by additive white noise.
Waveform apply_mask_filter(const Waveform& clean, const MaskFilterSpec& spec,
                           std::mt19937_64& rng);

struct SynthConfig {
  int n_speakers = 4;         // split into train (first half, rounded up) and dev
  int utts_per_speaker = 10;  // each emitted clean and masked
  int n_test_speakers = 0;    // extra speakers for a test partition
  bool blind_test = true;     // write "?" labels for the test partition
  double duration_s = 1.0;
  std::uint64_t seed = 7;
  MaskFilterSpec mask;
};

void validate(const SynthConfig& cfg);

/// Voiced-speech-like signal: jittered harmonic source, formant resonances,
/// fricative bursts and breath noise. Deterministic in `rng`.
Waveform synth_speech(std::mt19937_64& rng, double f0_base_hz, double formant_scale,
                      double duration_s);

struct SynthResult {
  Manifest manifest;
  std::vector<std::string> train_speakers;
  std::vector<std::string> dev_speakers;
  std::vector<std::string> test_speakers;
};

/// Writes wav/<utt_id>.wav, manifest.tsv and synth_meta.txt under out_dir.
/// Throws IoError when the directory is not writable.
SynthResult synth_corpus(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace maskcue

#endif  // MASKCUE_CORPUS_H_
