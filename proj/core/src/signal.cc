#include "maskcue/signal.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <unsupported/Eigen/FFT>

#include "maskcue/error.h"

namespace maskcue {

void validate(const Waveform& w) {
  if (w.sample_rate_hz <= 0) {
    throw ValidationError("waveform sample rate must be positive, got " +
                          std::to_string(w.sample_rate_hz));
  }
  if (w.samples.empty()) throw ValidationError("waveform is empty");
  for (double s : w.samples) {
    if (!std::isfinite(s)) throw ValidationError("waveform has non-finite samples");
  }
}

int frame_count(std::size_t len, int frame_len, int hop) {
  if (frame_len <= 0 || hop <= 0 || len < static_cast<std::size_t>(frame_len)) return 0;
  return static_cast<int>((len - frame_len) / hop) + 1;
}

int ms_to_samples(double ms, int sample_rate_hz) {
  return static_cast<int>(std::lround(ms * sample_rate_hz / 1000.0));
}

std::vector<double> raised_cosine_window(int n) {
  std::vector<double> w(std::max(n, 0), 1.0);
  if (n <= 1) return w;
  for (int i = 0; i < n; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
  }
  return w;
}

FrameSequence frame_signal(const Waveform& w, double frame_ms, double hop_ms,
                           WindowKind window) {
  if (!(hop_ms > 0.0) || frame_ms < hop_ms) {
    throw ValidationError("framing requires frame_ms >= hop_ms > 0");
  }
  validate(w);
  FrameSequence out;
  out.sample_rate_hz = w.sample_rate_hz;
  out.frame_len_samples = ms_to_samples(frame_ms, w.sample_rate_hz);
  out.hop_samples = ms_to_samples(hop_ms, w.sample_rate_hz);
  if (out.frame_len_samples <= 0 || out.hop_samples <= 0) {
    throw ValidationError("frame or hop shorter than one sample");
  }
  const int n = frame_count(w.size(), out.frame_len_samples, out.hop_samples);
  out.frames.resize(n, out.frame_len_samples);
  const std::vector<double> win = window == WindowKind::kRaisedCosine
                                      ? raised_cosine_window(out.frame_len_samples)
                                      : std::vector<double>(out.frame_len_samples, 1.0);
  for (int f = 0; f < n; ++f) {
    const std::size_t start = static_cast<std::size_t>(f) * out.hop_samples;
    for (int i = 0; i < out.frame_len_samples; ++i) {
      out.frames(f, i) = w.samples[start + i] * win[i];
    }
  }
  return out;
}

std::vector<double> pre_emphasis(std::span<const double> x, double coeff) {
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t i = y.size(); i-- > 1;) y[i] = x[i] - coeff * x[i - 1];
  return y;
}

std::vector<Complex> dft(std::span<const double> x) {
  std::vector<Complex> in(x.begin(), x.end());
  return dft(std::span<const Complex>(in));
}

namespace {

// Eigen's FFT keeps twiddle tables per length, so one engine per thread
// amortizes plan construction across calls.
Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine;
  return engine;
}

std::size_t largest_prime_factor(std::size_t n) {
  std::size_t largest = 1;
  for (std::size_t p = 2; p * p <= n; ++p) {
    while (n % p == 0) {
      largest = p;
      n /= p;
    }
  }
  return std::max(largest, n);
}

// The mixed-radix engine costs O(n p) for a prime factor p; above this the
// chirp-z route through power-of-two transforms is faster.
constexpr std::size_t kMaxDirectPrimeFactor = 61;

// Bluestein's identity nk = (n^2 + k^2 - (k - n)^2) / 2 turns the DFT into a
// circular convolution with the chirp exp(j pi m^2 / N).
std::vector<Complex> bluestein_forward(std::span<const Complex> x) {
  const std::size_t n = x.size();
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  std::vector<Complex> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2N keeps the phase argument small and exact.
    const std::size_t k2 = (k * k) % (2 * n);
    chirp[k] = std::polar(1.0, -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n));
  }
  std::vector<Complex> a(m, Complex(0.0, 0.0));
  std::vector<Complex> b(m, Complex(0.0, 0.0));
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
  b[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);

  Eigen::FFT<double>& fft = fft_engine();
  std::vector<Complex> fa(m), fb(m), conv(m);
  fft.fwd(fa.data(), a.data(), static_cast<int>(m));
  fft.fwd(fb.data(), b.data(), static_cast<int>(m));
  for (std::size_t k = 0; k < m; ++k) fa[k] *= fb[k];
  fft.inv(conv.data(), fa.data(), static_cast<int>(m));

  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = conv[k] * chirp[k];
  return out;
}

}  // namespace

std::vector<Complex> dft(std::span<const Complex> x) {
  // The engine does not handle a length-1 transform, which is the identity.
  if (x.size() <= 1) return {x.begin(), x.end()};
  if (largest_prime_factor(x.size()) > kMaxDirectPrimeFactor) return bluestein_forward(x);
  Eigen::FFT<double>& fft = fft_engine();
  std::vector<Complex> out(x.size());
  fft.fwd(out.data(), x.data(), static_cast<int>(x.size()));
  return out;
}

std::vector<Complex> idft(std::span<const Complex> x) {
  if (x.size() <= 1) return {x.begin(), x.end()};
  if (largest_prime_factor(x.size()) > kMaxDirectPrimeFactor) {
    // idft(x) = conj(dft(conj(x))) / N
    std::vector<Complex> conj_in(x.size());
    std::transform(x.begin(), x.end(), conj_in.begin(), [](Complex c) { return std::conj(c); });
    std::vector<Complex> out = bluestein_forward(conj_in);
    const double scale = 1.0 / static_cast<double>(x.size());
    for (Complex& c : out) c = std::conj(c) * scale;
    return out;
  }
  Eigen::FFT<double>& fft = fft_engine();
  std::vector<Complex> out(x.size());
  fft.inv(out.data(), x.data(), static_cast<int>(x.size()));
  return out;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

std::vector<double> power_spectrum(std::span<const double> frame, int n_fft) {
  if (!is_power_of_two(n_fft)) {
    throw ValidationError("n_fft must be a power of two, got " + std::to_string(n_fft));
  }
  if (frame.size() > static_cast<std::size_t>(n_fft)) {
    throw ValidationError("frame of " + std::to_string(frame.size()) +
                          " samples is longer than n_fft " + std::to_string(n_fft));
  }
  std::vector<Complex> padded(n_fft, Complex{});
  std::copy(frame.begin(), frame.end(), padded.begin());
  const std::vector<Complex> spec = dft(std::span<const Complex>(padded));
  std::vector<double> p(n_fft / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::norm(spec[k]);
  return p;
}

namespace {

double dct_scale(int k, int n) {
  return k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
}

double dct_basis(int k, int i, int n) {
  return dct_scale(k, n) * std::cos(std::numbers::pi * k * (2.0 * i + 1.0) / (2.0 * n));
}

}  // namespace

// Both directions use the even/odd reordering that turns a length-n DCT-II
// into one length-n complex DFT with a quarter-sample twiddle.
std::vector<double> dct2_orthonormal(std::span<const double> v, int n_keep) {
  const int n = static_cast<int>(v.size());
  if (n_keep < 1 || n_keep > n) {
    throw ValidationError("DCT n_keep " + std::to_string(n_keep) +
                          " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<Complex> reordered(n);
  for (int i = 0; 2 * i < n; ++i) reordered[i] = v[2 * i];
  for (int i = 0; 2 * i + 1 < n; ++i) reordered[n - 1 - i] = v[2 * i + 1];
  const std::vector<Complex> spec = dft(std::span<const Complex>(reordered));
  std::vector<double> c(n_keep);
  const double dc_scale = std::sqrt(1.0 / n);
  const double ac_scale = std::sqrt(2.0 / n);
  for (int k = 0; k < n_keep; ++k) {
    const Complex twiddle = std::polar(1.0, -std::numbers::pi * k / (2.0 * n));
    c[k] = (spec[k] * twiddle).real() * (k == 0 ? dc_scale : ac_scale);
  }
  return c;
}

std::vector<double> idct2_orthonormal(std::span<const double> c, int n) {
  if (n < 1 || c.size() > static_cast<std::size_t>(n)) {
    throw ValidationError("inverse DCT length must cover the coefficients");
  }
  // Unnormalised DCT-II values X[k], zero beyond the kept coefficients.
  std::vector<double> x(n + 1, 0.0);
  for (std::size_t k = 0; k < c.size(); ++k) {
    x[k] = c[k] * (k == 0 ? std::sqrt(static_cast<double>(n)) : std::sqrt(n / 2.0));
  }
  std::vector<Complex> spec(n);
  for (int k = 0; k < n; ++k) {
    const Complex twiddle = std::polar(1.0, std::numbers::pi * k / (2.0 * n));
    spec[k] = twiddle * Complex(x[k], k == 0 ? 0.0 : -x[n - k]);
  }
  const std::vector<Complex> reordered = idft(std::span<const Complex>(spec));
  std::vector<double> v(n);
  for (int i = 0; 2 * i < n; ++i) v[2 * i] = reordered[i].real();
  for (int i = 0; 2 * i + 1 < n; ++i) v[2 * i + 1] = reordered[n - 1 - i].real();
  return v;
}

DctMatrix::DctMatrix(int input_len, int n_keep) : input_len_(input_len) {
  if (n_keep < 1 || n_keep > input_len) {
    throw ValidationError("DCT n_keep " + std::to_string(n_keep) +
                          " outside [1, " + std::to_string(input_len) + "]");
  }
  basis_.resize(n_keep, input_len);
  for (int k = 0; k < n_keep; ++k) {
    for (int i = 0; i < input_len; ++i) basis_(k, i) = dct_basis(k, i, input_len);
  }
}

Matrix DctMatrix::apply(const Matrix& rows) const {
  if (rows.cols() != input_len_) throw ValidationError("DCT input length mismatch");
  return rows * basis_.transpose();
}

std::vector<Complex> analytic_signal(std::span<const double> x) {
  if (x.empty()) throw ValidationError("analytic signal of an empty input");
  const std::size_t n = x.size();
  std::vector<Complex> spec = dft(x);
  // Bins 1..ceil(n/2)-1 are positive frequencies; for even n bin n/2 is
  // Nyquist and is kept as is.
  const std::size_t half = n / 2;
  for (std::size_t k = 1; k < n; ++k) {
    if (k < (n + 1) / 2) {
      spec[k] *= 2.0;
    } else if (n % 2 == 0 && k == half) {
      // Nyquist
    } else {
      spec[k] = 0.0;
    }
  }
  return idft(std::span<const Complex>(spec));
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

TriangularFilterBank build_filterbank(FilterScale scale, int n_filters, int n_fft,
                                      int sample_rate_hz, double fmin_hz,
                                      double fmax_hz) {
  if (n_filters < 2) throw ValidationError("filterbank needs at least 2 filters");
  if (!is_power_of_two(n_fft)) throw ValidationError("filterbank n_fft must be a power of two");
  if (sample_rate_hz <= 0) throw ValidationError("filterbank sample rate must be positive");
  if (!(fmin_hz >= 0.0) || !(fmin_hz < fmax_hz) || fmax_hz > sample_rate_hz / 2.0) {
    throw ValidationError("filterbank band edges must satisfy 0 <= fmin < fmax <= fs/2");
  }

  // n_filters + 2 edge points, equally spaced on the chosen scale.
  const auto to_scale = [scale](double hz) {
    return scale == FilterScale::kMel ? hz_to_mel(hz) : hz;
  };
  const auto from_scale = [scale](double v) {
    return scale == FilterScale::kMel ? mel_to_hz(v) : v;
  };
  const double lo = to_scale(fmin_hz);
  const double hi = to_scale(fmax_hz);
  std::vector<double> edges(n_filters + 2);
  for (int i = 0; i < n_filters + 2; ++i) {
    edges[i] = from_scale(lo + (hi - lo) * i / (n_filters + 1));
  }
  edges.front() = fmin_hz;
  edges.back() = fmax_hz;

  TriangularFilterBank fb;
  fb.scale = scale;
  fb.n_fft = n_fft;
  fb.sample_rate_hz = sample_rate_hz;
  fb.weights = Matrix::Zero(n_filters, n_fft / 2 + 1);
  fb.center_freqs_hz.assign(edges.begin() + 1, edges.end() - 1);
  const double bin_hz = static_cast<double>(sample_rate_hz) / n_fft;
  for (int m = 0; m < n_filters; ++m) {
    const double left = edges[m];
    const double centre = edges[m + 1];
    const double right = edges[m + 2];
    for (int k = 0; k < n_fft / 2 + 1; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f >= left && f <= centre) {
        w = (f - left) / (centre - left);
      } else if (f > centre && f <= right) {
        w = (right - f) / (right - centre);
      }
      fb.weights(m, k) = w;
    }
  }
  return fb;
}

}  // namespace maskcue
