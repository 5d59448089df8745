// LFCC, MFCC, IFCC and CQCC front ends.
//
// Each extractor yields 30 static cepstral coefficients per 20 ms frame
// (10 ms hop); append_deltas stacks regression deltas and delta-deltas into
// the 90-dimensional representation the classifier consumes. No CMVN and
// no voice activity detection are applied.

#ifndef MASKCUE_FEATURES_H_
#define MASKCUE_FEATURES_H_

#include <array>
#include <memory>
#include <string>
#include <string_view>

#include "maskcue/cqt.h"
#include "maskcue/inst_freq.h"
#include "maskcue/signal.h"

namespace maskcue {

enum class FeatureKind { kLfcc = 0, kMfcc = 1, kIfcc = 2, kCqcc = 3 };

inline constexpr std::array<FeatureKind, 4> kAllFeatureKinds = {
    FeatureKind::kLfcc, FeatureKind::kMfcc, FeatureKind::kIfcc, FeatureKind::kCqcc};

/// "LFCC", "MFCC", "IFCC", "CQCC".
std::string_view feature_kind_name(FeatureKind kind);
/// Case-insensitive inverse of feature_kind_name.
FeatureKind parse_feature_kind(std::string_view name);

struct FeatureMatrix {
  FeatureKind kind = FeatureKind::kLfcc;
  Matrix values;  // n_frames x dim
  double hop_ms = 10.0;

  int n_frames() const { return static_cast<int>(values.rows()); }
  int dim() const { return static_cast<int>(values.cols()); }
};

/// Shared by LFCC and MFCC; the filter scale is what tells them apart.
struct CepstralConfig {
  double frame_ms = 20.0;
  double hop_ms = 10.0;
  int n_fft = 512;
  int n_filters = 40;
  double fmin_hz = 0.0;
  double fmax_hz = 8000.0;
  int n_ceps = 30;
  bool pre_emphasis = false;
  double pre_emphasis_coeff = 0.97;
};

struct IfccConfig {
  double frame_ms = 20.0;
  double hop_ms = 10.0;
  int n_subbands = 60;
  double fmin_hz = 0.0;
  double fmax_hz = 8000.0;
  int n_ceps = 30;
  double denominator_floor = kInstFreqDenominatorFloor;
};

struct CqccConfig {
  double frame_ms = 20.0;  // frame geometry fixes the CQT evaluation centres
  double hop_ms = 10.0;
  int bins_per_octave = 96;
  double fmin_hz = 8000.0 / 512.0;  // fmax / 2^9
  double fmax_hz = 8000.0;
  int resample_period = 16;
  int n_ceps = 30;
};

struct FeatureConfig {
  CepstralConfig lfcc;
  CepstralConfig mfcc;
  IfccConfig ifcc;
  CqccConfig cqcc;
  int delta_window = 2;
};

/// Filterbank energies (before the log) for every frame, n_frames x n_filters.
Matrix filterbank_energies(const Waveform& w, const CepstralConfig& cfg, FilterScale scale);

FeatureMatrix extract_lfcc(const Waveform& w, const CepstralConfig& cfg = {});
FeatureMatrix extract_mfcc(const Waveform& w, const CepstralConfig& cfg = {});
FeatureMatrix extract_ifcc(const Waveform& w, const IfccConfig& cfg = {});
FeatureMatrix extract_cqcc(const Waveform& w, const CqccConfig& cfg = {});

/// Frame-pooled subband instantaneous frequencies (n_frames x n_subbands),
/// the IFCC input before the DCT. Flagged samples are left out of the mean.
Matrix pooled_instantaneous_frequency(const InstFreqTrack& track, int frame_len, int hop);

/// Uniformly resampled CQT log power per frame, the CQCC input before the DCT.
Matrix cqcc_uniform_log_power(const Waveform& w, const CqccConfig& cfg);

/// Regression deltas over +-window frames with edge replication; delta-deltas
/// are deltas of the deltas. Output columns are [static | delta | delta-delta].
FeatureMatrix append_deltas(const FeatureMatrix& f, int delta_window);

namespace detail {
class ExtractorEngine;
}

/// Reusable extractor for one feature kind. Filterbanks, DCT bases and the
/// CQT kernel are built once in the constructor and shared read-only, so a
/// single instance may be used from several threads.
class FeatureExtractor {
 public:
  FeatureExtractor(FeatureKind kind, const FeatureConfig& cfg);

  FeatureKind kind() const { return kind_; }
  /// 30 static coefficients per frame.
  FeatureMatrix static_features(const Waveform& w) const;
  /// Static + delta + delta-delta (90 dims).
  FeatureMatrix operator()(const Waveform& w) const;

 private:
  FeatureKind kind_;
  int delta_window_;
  std::shared_ptr<const detail::ExtractorEngine> engine_;
};

}  // namespace maskcue

#endif  // MASKCUE_FEATURES_H_
