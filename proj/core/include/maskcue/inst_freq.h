// Instantaneous frequency of analytic signals computed from DFT properties,
//
//   theta'[n] = (2 pi / N) Re{ IDFT{k Z[k]}[n] / IDFT{Z[k]}[n] },
//
// which avoids phase unwrapping. Samples whose denominator is negligible
// relative to the strongest sample are set to 0 and flagged.

#ifndef MASKCUE_INST_FREQ_H_
#define MASKCUE_INST_FREQ_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "maskcue/signal.h"

namespace maskcue {

inline constexpr double kInstFreqDenominatorFloor = 1e-12;

/// Z[k], the DFT of an analytic signal; N = bins.size().
struct AnalyticSpectrum {
  std::vector<Complex> bins;

  std::size_t n() const { return bins.size(); }
};

struct InstFreq {
  std::vector<double> theta;          // radians per sample
  std::vector<double> envelope;       // |z[n]|
  std::vector<std::uint8_t> flagged;  // 1 where the denominator was negligible
  std::size_t n_flagged = 0;
};

/// Throws ValidationError when Z is identically zero.
InstFreq instantaneous_frequency(const AnalyticSpectrum& z,
                                 double denominator_floor = kInstFreqDenominatorFloor);

/// Narrowband decomposition of a whole utterance into uniform-width subbands,
/// realised by masking the DFT of the signal and forming each subband's
/// analytic signal directly in the frequency domain.
struct InstFreqTrack {
  Matrix subband_if;  // n_subbands x n_samples, radians/sample, clamped to [0, pi]
  Matrix envelope;    // n_subbands x n_samples, |z[n]|
  std::vector<double> subband_centers_hz;
  std::vector<double> subband_edges_hz;  // n_subbands + 1
  std::vector<std::uint8_t> flagged;     // n_subbands x n_samples, row-major
  std::size_t n_flagged = 0;
  int sample_rate_hz = 0;

  int n_subbands() const { return static_cast<int>(subband_if.rows()); }
  int n_samples() const { return static_cast<int>(subband_if.cols()); }
  bool is_flagged(int band, int n) const {
    return flagged[static_cast<std::size_t>(band) * n_samples() + n] != 0;
  }
};

InstFreqTrack subband_instantaneous_frequency(
    const Waveform& w, int n_subbands, double fmin_hz, double fmax_hz,
    double denominator_floor = kInstFreqDenominatorFloor);

}  // namespace maskcue

#endif  // MASKCUE_INST_FREQ_H_
