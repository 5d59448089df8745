// Constant-Q transform with geometrically spaced bins.
//
// Bin k has centre f_k = fmin * 2^(k/B) for k = 0..K-1 and a raised-cosine
// (Hann) windowed complex exponential atom whose length N_k = round(Q fs / f_k)
// shrinks with frequency, Q = 1 / (2^(1/B) - 1). The atom is stored centred:
// offsets m = -floor(N_k/2) .. floor(N_k/2), normalised so the window sums to 1.
//
//   Y(k, n) = sum_m x(n + m) conj(a_k(m)),  x = 0 outside the signal.

#ifndef MASKCUE_CQT_H_
#define MASKCUE_CQT_H_

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "maskcue/signal.h"

namespace maskcue {

using ComplexMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class CqtKernel {
 public:
  CqtKernel(int sample_rate_hz, double fmin_hz, double fmax_hz, int bins_per_octave);

  int sample_rate_hz() const { return sample_rate_hz_; }
  double fmin_hz() const { return fmin_hz_; }
  double fmax_hz() const { return fmax_hz_; }
  int bins_per_octave() const { return bins_per_octave_; }
  double q_factor() const { return q_; }
  int bin_count() const { return static_cast<int>(centers_hz_.size()); }

  double center_hz(int k) const { return centers_hz_[k]; }
  const std::vector<double>& centers_hz() const { return centers_hz_; }
  /// N_k, the nominal window length.
  int window_length(int k) const { return lengths_[k]; }
  /// floor(N_k / 2); the atom spans 2 * half_width + 1 samples.
  int half_width(int k) const { return lengths_[k] / 2; }
  /// Raised-cosine weight at offset m (|m| <= half_width), before normalisation.
  double window(int k, int m) const;
  /// Sum of the window over its support.
  double window_sum(int k) const { return window_sums_[k]; }
  /// a_k(m) for m = -half_width..half_width, index i <-> offset i - half_width.
  std::vector<Complex> atom(int k) const;

 private:
  int sample_rate_hz_;
  double fmin_hz_;
  double fmax_hz_;
  int bins_per_octave_;
  double q_;
  std::vector<double> centers_hz_;
  std::vector<int> lengths_;
  std::vector<double> window_sums_;
};

struct CqtSpectrogram {
  ComplexMatrix y;            // K x n_frames
  std::vector<long> centers;  // sample index of each column
};

/// Centres of the frames produced by frame_signal with the same geometry.
std::vector<long> frame_centers(std::size_t len, int frame_len, int hop);

/// Evaluates Y(k, n) at the given centres. Exact (no kernel truncation): each
/// Hann atom is a sum of three complex exponentials, so every windowed sum
/// reduces to differences of running sums.
CqtSpectrogram cqt(const Waveform& w, const CqtKernel& kernel,
                   std::span<const long> centers);

/// Hop-spaced variant; frames follow the short-time framing geometry.
CqtSpectrogram cqt(const Waveform& w, const CqtKernel& kernel, int frame_len, int hop);

/// Log power of a CQT resampled from the geometric frequency axis onto a
/// uniform one by linear interpolation. The uniform spacing is fmin / d,
/// i.e. the first octave receives d samples per fmin of bandwidth.
class UniformResampler {
 public:
  UniformResampler(const CqtKernel& kernel, int resample_period);

  int size() const { return static_cast<int>(freqs_hz_.size()); }
  const std::vector<double>& freqs_hz() const { return freqs_hz_; }
  double spacing_hz() const { return spacing_hz_; }
  /// Rows are frames, input columns are CQT bins of log power.
  Matrix apply(const Matrix& log_power_by_frame) const;

 private:
  double spacing_hz_;
  std::vector<double> freqs_hz_;
  std::vector<int> lower_bin_;
  std::vector<double> frac_;
};

/// log(max(|Y|^2, floor)) with frames as rows.
Matrix cqt_log_power(const CqtSpectrogram& spec);

}  // namespace maskcue

#endif  // MASKCUE_CQT_H_
