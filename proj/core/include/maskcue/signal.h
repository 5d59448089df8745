// DSP primitives used by every feature extractor: framing, windows,
// Fourier transforms, orthonormal DCT, analytic signals and triangular
// filterbanks. Everything here is a pure function of its arguments.

#ifndef MASKCUE_SIGNAL_H_
#define MASKCUE_SIGNAL_H_

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace maskcue {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Complex = std::complex<double>;

/// Log floor applied wherever a log power is taken.
inline constexpr double kLogPowerFloor = 1e-30;

struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 16000;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

/// Throws ValidationError unless the waveform is non-empty, finite and has a
/// positive sample rate.
void validate(const Waveform& w);

enum class WindowKind { kRectangular, kRaisedCosine };

struct FrameSequence {
  Matrix frames;  // one frame per row
  int frame_len_samples = 0;
  int hop_samples = 0;
  int sample_rate_hz = 0;

  int count() const { return static_cast<int>(frames.rows()); }
};

/// floor((len - frame_len) / hop) + 1 when len >= frame_len, else 0.
int frame_count(std::size_t len, int frame_len, int hop);

/// Duration in milliseconds to a whole number of samples (rounded).
int ms_to_samples(double ms, int sample_rate_hz);

/// Hamming-shaped raised cosine, 0.54 - 0.46 cos(2 pi n / (N - 1)).
std::vector<double> raised_cosine_window(int n);

/// Frames left to right without padding a trailing partial frame. The
/// result may hold zero frames; callers that need at least one decide how
/// to report it.
FrameSequence frame_signal(const Waveform& w, double frame_ms, double hop_ms,
                           WindowKind window);

/// x[n] - coeff * x[n - 1], first sample passed through.
std::vector<double> pre_emphasis(std::span<const double> x, double coeff);

std::vector<Complex> dft(std::span<const double> x);
std::vector<Complex> dft(std::span<const Complex> x);
/// Inverse DFT including the 1/N scaling.
std::vector<Complex> idft(std::span<const Complex> x);

bool is_power_of_two(int n);

/// |DFT(frame zero-padded to n_fft)[k]|^2 for k = 0..n_fft/2.
std::vector<double> power_spectrum(std::span<const double> frame, int n_fft);

/// Type-II DCT with orthonormal scaling, first n_keep coefficients.
std::vector<double> dct2_orthonormal(std::span<const double> v, int n_keep);

/// Inverse of the full-length orthonormal DCT-II (an orthonormal DCT-III).
/// Missing trailing coefficients are treated as zero; n is the output length.
std::vector<double> idct2_orthonormal(std::span<const double> c, int n);

/// Precomputed orthonormal DCT-II basis for repeated transforms of one length.
class DctMatrix {
 public:
  DctMatrix(int input_len, int n_keep);
  int input_len() const { return input_len_; }
  int n_keep() const { return static_cast<int>(basis_.rows()); }
  /// Applies the transform to each row of `rows`.
  Matrix apply(const Matrix& rows) const;

 private:
  int input_len_;
  Matrix basis_;  // n_keep x input_len
};

/// Frequency-domain analytic signal: DC and Nyquist kept, positive bins
/// doubled, negative bins zeroed.
std::vector<Complex> analytic_signal(std::span<const double> x);

enum class FilterScale { kLinear, kMel };

double hz_to_mel(double hz);
double mel_to_hz(double mel);

struct TriangularFilterBank {
  FilterScale scale = FilterScale::kLinear;
  int n_fft = 0;
  int sample_rate_hz = 0;
  Matrix weights;  // n_filters x (n_fft/2 + 1)
  std::vector<double> center_freqs_hz;

  int n_filters() const { return static_cast<int>(weights.rows()); }
  int n_bins() const { return static_cast<int>(weights.cols()); }
};

/// Unit-peak triangles whose edges sit on the neighbouring centres. Centres
/// are equally spaced in Hz (linear) or in mel between fmin and fmax, with
/// fmin and fmax themselves serving as the outer edges.
TriangularFilterBank build_filterbank(FilterScale scale, int n_filters, int n_fft,
                                      int sample_rate_hz, double fmin_hz,
                                      double fmax_hz);

}  // namespace maskcue

#endif  // MASKCUE_SIGNAL_H_
