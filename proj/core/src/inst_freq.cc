#include "maskcue/inst_freq.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include "maskcue/error.h"

namespace maskcue {

namespace {

// Shared by the public operator and the subband track; `numer` and `denom`
// are the inverse transforms of k Z[k] and Z[k].
void ratio_to_if(std::span<const Complex> numer, std::span<const Complex> denom,
                 double denominator_floor, InstFreq& out) {
  const std::size_t n = denom.size();
  out.theta.assign(n, 0.0);
  out.envelope.resize(n);
  out.flagged.assign(n, 0);
  out.n_flagged = 0;
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.envelope[i] = std::abs(denom[i]);
    peak = std::max(peak, out.envelope[i]);
  }
  const double threshold = denominator_floor * peak;
  const double scale = 2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (peak == 0.0 || out.envelope[i] <= threshold) {
      out.flagged[i] = 1;
      ++out.n_flagged;
      continue;
    }
    // Re{a / b} = Re{a conj(b)} / |b|^2
    const Complex a = numer[i];
    const Complex b = denom[i];
    const double re = (a.real() * b.real() + a.imag() * b.imag()) / std::norm(b);
    out.theta[i] = scale * re;
  }
}

}  // namespace

InstFreq instantaneous_frequency(const AnalyticSpectrum& z, double denominator_floor) {
  const std::size_t n = z.n();
  if (n == 0) throw ValidationError("instantaneous frequency of an empty spectrum");
  if (std::all_of(z.bins.begin(), z.bins.end(), [](Complex c) { return c == Complex{}; })) {
    throw ValidationError("instantaneous frequency of an all-zero spectrum");
  }
  std::vector<Complex> weighted(n);
  for (std::size_t k = 0; k < n; ++k) weighted[k] = static_cast<double>(k) * z.bins[k];
  const std::vector<Complex> numer = idft(std::span<const Complex>(weighted));
  const std::vector<Complex> denom = idft(std::span<const Complex>(z.bins));
  InstFreq out;
  ratio_to_if(numer, denom, denominator_floor, out);
  return out;
}

InstFreqTrack subband_instantaneous_frequency(const Waveform& w, int n_subbands,
                                              double fmin_hz, double fmax_hz,
                                              double denominator_floor) {
  validate(w);
  if (n_subbands < 1) throw ValidationError("need at least one subband");
  const double nyquist = w.sample_rate_hz / 2.0;
  if (!(fmin_hz >= 0.0) || !(fmin_hz < fmax_hz) || fmax_hz > nyquist) {
    throw ValidationError("subband range must satisfy 0 <= fmin < fmax <= fs/2");
  }
  const std::size_t n = w.size();
  const std::vector<Complex> spectrum = dft(std::span<const double>(w.samples));
  const double bin_hz = static_cast<double>(w.sample_rate_hz) / static_cast<double>(n);
  const std::size_t half = n / 2;  // highest non-negative frequency bin

  InstFreqTrack track;
  track.sample_rate_hz = w.sample_rate_hz;
  track.subband_if = Matrix::Zero(n_subbands, static_cast<Eigen::Index>(n));
  track.envelope = Matrix::Zero(n_subbands, static_cast<Eigen::Index>(n));
  track.flagged.assign(static_cast<std::size_t>(n_subbands) * n, 0);
  track.subband_edges_hz.resize(n_subbands + 1);
  for (int b = 0; b <= n_subbands; ++b) {
    track.subband_edges_hz[b] = fmin_hz + (fmax_hz - fmin_hz) * b / n_subbands;
  }

  const auto edge_bin = [&](double hz) {
    return static_cast<std::size_t>(std::ceil(hz / bin_hz - 1e-9));
  };

  std::vector<Complex> z(n);
  std::vector<Complex> kz(n);
  InstFreq band_if;
  for (int b = 0; b < n_subbands; ++b) {
    const double lo_hz = track.subband_edges_hz[b];
    const double hi_hz = track.subband_edges_hz[b + 1];
    track.subband_centers_hz.push_back(0.5 * (lo_hz + hi_hz));
    const std::size_t first = edge_bin(lo_hz);
    // The last band is closed at fmax so that the Nyquist bin is not lost.
    std::size_t end = b + 1 == n_subbands ? static_cast<std::size_t>(std::floor(hi_hz / bin_hz + 1e-9)) + 1
                                          : edge_bin(hi_hz);
    end = std::min(end, half + 1);

    std::fill(z.begin(), z.end(), Complex{});
    std::fill(kz.begin(), kz.end(), Complex{});
    bool any = false;
    for (std::size_t k = first; k < end; ++k) {
      const bool edge = k == 0 || (n % 2 == 0 && k == half);
      z[k] = edge ? spectrum[k] : 2.0 * spectrum[k];
      kz[k] = static_cast<double>(k) * z[k];
      any = any || z[k] != Complex{};
    }

    std::uint8_t* flags = track.flagged.data() + static_cast<std::size_t>(b) * n;
    if (!any) {
      std::fill(flags, flags + n, 1);
      track.n_flagged += n;
      continue;
    }
    const std::vector<Complex> numer = idft(std::span<const Complex>(kz));
    const std::vector<Complex> denom = idft(std::span<const Complex>(z));
    ratio_to_if(numer, denom, denominator_floor, band_if);
    for (std::size_t i = 0; i < n; ++i) {
      track.subband_if(b, static_cast<Eigen::Index>(i)) =
          std::clamp(band_if.theta[i], 0.0, std::numbers::pi);
      track.envelope(b, static_cast<Eigen::Index>(i)) = band_if.envelope[i];
      flags[i] = band_if.flagged[i];
    }
    track.n_flagged += band_if.n_flagged;
  }
  return track;
}

}  // namespace maskcue
