#include "maskcue/cqt.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "maskcue/error.h"

namespace maskcue {

CqtKernel::CqtKernel(int sample_rate_hz, double fmin_hz, double fmax_hz,
                     int bins_per_octave)
    : sample_rate_hz_(sample_rate_hz),
      fmin_hz_(fmin_hz),
      fmax_hz_(fmax_hz),
      bins_per_octave_(bins_per_octave) {
  if (sample_rate_hz <= 0) throw ValidationError("CQT sample rate must be positive");
  if (bins_per_octave < 1) throw ValidationError("CQT needs at least one bin per octave");
  if (!(fmin_hz > 0.0) || !(fmin_hz < fmax_hz)) {
    throw ValidationError("CQT requires 0 < fmin < fmax");
  }
  if (fmax_hz > sample_rate_hz / 2.0) {
    throw ValidationError("CQT fmax " + std::to_string(fmax_hz) + " Hz exceeds Nyquist");
  }
  q_ = 1.0 / (std::exp2(1.0 / bins_per_octave) - 1.0);
  const int k_count =
      static_cast<int>(std::ceil(bins_per_octave * std::log2(fmax_hz / fmin_hz) - 1e-9));
  for (int k = 0; k < k_count; ++k) {
    const double f = fmin_hz * std::exp2(static_cast<double>(k) / bins_per_octave);
    if (f >= fmax_hz) break;
    centers_hz_.push_back(f);
    const int len = std::max(1, static_cast<int>(std::lround(q_ * sample_rate_hz / f)));
    lengths_.push_back(len);
  }
  if (centers_hz_.empty()) throw ValidationError("CQT band holds no bins");
  window_sums_.resize(centers_hz_.size());
  // sum_{|m|<=h} cos(pi m / (h + 1)) = 1, so the window sums to h + 1.
  for (int k = 0; k < bin_count(); ++k) window_sums_[k] = half_width(k) + 1.0;
}

double CqtKernel::window(int k, int m) const {
  const int half = half_width(k);
  return 0.5 * (1.0 + std::cos(std::numbers::pi * m / (half + 1.0)));
}

std::vector<Complex> CqtKernel::atom(int k) const {
  const int half = half_width(k);
  const double omega = 2.0 * std::numbers::pi * centers_hz_[k] / sample_rate_hz_;
  std::vector<Complex> a(2 * half + 1);
  for (int m = -half; m <= half; ++m) {
    a[m + half] = std::polar(window(k, m) / window_sums_[k], omega * m);
  }
  return a;
}

std::vector<long> frame_centers(std::size_t len, int frame_len, int hop) {
  const int n = frame_count(len, frame_len, hop);
  std::vector<long> c(n);
  for (int j = 0; j < n; ++j) c[j] = static_cast<long>(j) * hop + frame_len / 2;
  return c;
}

namespace {

constexpr long kBlock = 256;
constexpr int kAnchorEvery = 32;
constexpr int kTerms = 3;

using Sums = std::array<Complex, kTerms>;

// Sums of x[u] exp(-i beta_t u) for three frequencies beta_t over arbitrary
// ranges. u is split as kBlock * q + r; phasors for r come from a shared
// table (real and imaginary rows per frequency) and those for q from a
// per-block list, so a range costs one small matrix-vector product per block.
class PhasorSums {
 public:
  PhasorSums(std::span<const double> x, const double (&betas)[kTerms]) : x_(x.data(), static_cast<Eigen::Index>(x.size())) {
    for (int t = 0; t < kTerms; ++t) {
      const Complex step = std::polar(1.0, -betas[t]);
      for (int r = 0; r < kBlock; r += kAnchorEvery) {
        Complex p = std::polar(1.0, -betas[t] * r);
        for (int d = 0; d < kAnchorEvery; ++d) {
          table_(2 * t, r + d) = p.real();
          table_(2 * t + 1, r + d) = p.imag();
          p *= step;
        }
      }
    }
    const long blocks = (static_cast<long>(x.size()) + kBlock - 1) / kBlock;
    block_phasor_.resize(blocks);
    for (long q = 0; q < blocks; ++q) {
      for (int t = 0; t < kTerms; ++t) {
        block_phasor_[q][t] = std::polar(1.0, -betas[t] * static_cast<double>(q * kBlock));
      }
    }
  }

  // sums over u in [a, b)
  Sums range(long a, long b) const {
    Sums total{};
    while (a < b) {
      const long q = a / kBlock;
      const long e = std::min(b, (q + 1) * kBlock);
      const Eigen::Matrix<double, 2 * kTerms, 1> v =
          table_.middleCols(a - q * kBlock, e - a) * x_.segment(a, e - a);
      for (int t = 0; t < kTerms; ++t) total[t] += block_phasor_[q][t] * Complex(v(2 * t), v(2 * t + 1));
      a = e;
    }
    return total;
  }

 private:
  Eigen::Map<const Eigen::VectorXd> x_;
  Eigen::Matrix<double, 2 * kTerms, kBlock> table_;
  std::vector<Sums> block_phasor_;
};

}  // namespace

CqtSpectrogram cqt(const Waveform& w, const CqtKernel& kernel,
                   std::span<const long> centers) {
  validate(w);
  if (w.sample_rate_hz != kernel.sample_rate_hz()) {
    throw ValidationError("CQT kernel built for " + std::to_string(kernel.sample_rate_hz()) +
                          " Hz applied to " + std::to_string(w.sample_rate_hz) + " Hz audio");
  }
  const long len = static_cast<long>(w.size());
  const int n_bins = kernel.bin_count();
  const std::size_t n_frames = centers.size();
  CqtSpectrogram out;
  out.centers.assign(centers.begin(), centers.end());
  out.y = ComplexMatrix::Zero(n_bins, static_cast<Eigen::Index>(n_frames));

  const std::span<const double> x(w.samples);
  std::vector<long> lo(n_frames), hi(n_frames), marks;
  std::vector<Sums> prefix;
  for (int k = 0; k < n_bins; ++k) {
    const long half = kernel.half_width(k);
    marks.clear();
    for (std::size_t j = 0; j < n_frames; ++j) {
      lo[j] = std::max(centers[j] - half, 0L);
      hi[j] = std::min(centers[j] + half + 1, len);  // exclusive
      if (lo[j] >= hi[j]) continue;
      marks.push_back(lo[j]);
      marks.push_back(hi[j]);
    }
    if (marks.empty()) continue;
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
    const auto mark_index = [&](long pos) {
      return std::lower_bound(marks.begin(), marks.end(), pos) - marks.begin();
    };

    const double omega = 2.0 * std::numbers::pi * kernel.center_hz(k) / w.sample_rate_hz;
    const double alpha = std::numbers::pi / (half + 1.0);
    // 0.5 (1 + cos(alpha m)) e^{-i omega m} split into three exponentials.
    const double betas[kTerms] = {omega, omega - alpha, omega + alpha};
    const double coefs[kTerms] = {0.5, 0.25, 0.25};
    const double norm = 1.0 / kernel.window_sum(k);
    const PhasorSums sums(x, betas);
    prefix.assign(marks.size(), Sums{});
    for (std::size_t m = 1; m < marks.size(); ++m) {
      const Sums seg = sums.range(marks[m - 1], marks[m]);
      for (int t = 0; t < kTerms; ++t) prefix[m][t] = prefix[m - 1][t] + seg[t];
    }
    for (std::size_t j = 0; j < n_frames; ++j) {
      if (lo[j] >= hi[j]) continue;
      const Sums& upper = prefix[mark_index(hi[j])];
      const Sums& lower = prefix[mark_index(lo[j])];
      Complex y{};
      for (int t = 0; t < kTerms; ++t) {
        y += coefs[t] * std::polar(1.0, betas[t] * static_cast<double>(centers[j])) * (upper[t] - lower[t]);
      }
      out.y(k, static_cast<Eigen::Index>(j)) = norm * y;
    }
  }
  return out;
}

CqtSpectrogram cqt(const Waveform& w, const CqtKernel& kernel, int frame_len, int hop) {
  const std::vector<long> c = frame_centers(w.size(), frame_len, hop);
  return cqt(w, kernel, c);
}

Matrix cqt_log_power(const CqtSpectrogram& spec) {
  Matrix out(spec.y.cols(), spec.y.rows());
  for (Eigen::Index k = 0; k < spec.y.rows(); ++k) {
    for (Eigen::Index j = 0; j < spec.y.cols(); ++j) {
      out(j, k) = std::log(std::max(std::norm(spec.y(k, j)), kLogPowerFloor));
    }
  }
  return out;
}

UniformResampler::UniformResampler(const CqtKernel& kernel, int resample_period) {
  if (resample_period < 1) throw ValidationError("CQCC resampling period must be >= 1");
  const std::vector<double>& f = kernel.centers_hz();
  // Spacing fmin (2^(kl/B) - 1) with kl = B log2(1 + 1/d) is fmin / d.
  spacing_hz_ = kernel.fmin_hz() / resample_period;
  const double top = f.back();
  const int n = static_cast<int>(std::floor((top - f.front()) / spacing_hz_ + 1e-9)) + 1;
  freqs_hz_.resize(n);
  lower_bin_.resize(n);
  frac_.resize(n);
  const int last = static_cast<int>(f.size()) - 1;
  int k = 0;
  for (int i = 0; i < n; ++i) {
    const double fi = std::min(f.front() + i * spacing_hz_, top);
    freqs_hz_[i] = fi;
    while (k < last - 1 && f[k + 1] <= fi) ++k;
    if (last == 0) {
      lower_bin_[i] = 0;
      frac_[i] = 0.0;
      continue;
    }
    lower_bin_[i] = k;
    frac_[i] = std::clamp((fi - f[k]) / (f[k + 1] - f[k]), 0.0, 1.0);
  }
}

Matrix UniformResampler::apply(const Matrix& log_power_by_frame) const {
  Matrix out(log_power_by_frame.rows(), size());
  const Eigen::Index cols = log_power_by_frame.cols();
  for (Eigen::Index r = 0; r < log_power_by_frame.rows(); ++r) {
    for (int i = 0; i < size(); ++i) {
      const int k = lower_bin_[i];
      const double a = log_power_by_frame(r, k);
      const double b = k + 1 < cols ? log_power_by_frame(r, k + 1) : a;
      out(r, i) = a + frac_[i] * (b - a);
    }
  }
  return out;
}

}  // namespace maskcue
