#include "maskcue/viz.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "maskcue/binary_io.h"
#include "maskcue/error.h"
#include "maskcue/inst_freq.h"

namespace maskcue {

SpectrogramGrid compute_spectrogram(const Waveform& w, const SpectrogramConfig& cfg) {
  const FrameSequence frames = frame_signal(w, cfg.frame_ms, cfg.hop_ms, WindowKind::kRaisedCosine);
  if (frames.count() < 1) throw ValidationError("signal is shorter than one analysis frame");
  SpectrogramGrid g;
  const int bins = cfg.n_fft / 2 + 1;
  g.log_power_db.resize(frames.count(), bins);
  const double floor_power = std::pow(10.0, cfg.floor_db / 10.0);
  for (int f = 0; f < frames.count(); ++f) {
    const Eigen::RowVectorXd row = frames.frames.row(f);
    const std::vector<double> p =
        power_spectrum(std::span<const double>(row.data(), row.size()), cfg.n_fft);
    for (int k = 0; k < bins; ++k) {
      g.log_power_db(f, k) = std::max(10.0 * std::log10(std::max(p[k], floor_power)), cfg.floor_db);
    }
    g.times_s.push_back((f * frames.hop_samples + frames.frame_len_samples / 2.0) / w.sample_rate_hz);
  }
  for (int k = 0; k < bins; ++k) {
    g.freqs_hz.push_back(static_cast<double>(k) * w.sample_rate_hz / cfg.n_fft);
  }
  return g;
}

Pyknogram compute_pyknogram(const Waveform& w, const PyknogramConfig& cfg) {
  validate(w);
  const int frame_len = ms_to_samples(cfg.frame_ms, w.sample_rate_hz);
  const int hop = ms_to_samples(cfg.hop_ms, w.sample_rate_hz);
  const int n_frames = frame_count(w.size(), frame_len, hop);
  if (n_frames < 1) throw ValidationError("signal is shorter than one analysis frame");
  const InstFreqTrack track =
      subband_instantaneous_frequency(w, cfg.n_subbands, cfg.fmin_hz, cfg.fmax_hz);
  Pyknogram p;
  p.n_subbands = cfg.n_subbands;
  p.nyquist_hz = w.sample_rate_hz / 2.0;
  p.duration_s = w.duration_s();
  const double peak = track.envelope.size() > 0 ? track.envelope.maxCoeff() : 0.0;
  p.amp_threshold = cfg.amp_threshold_ratio * peak;
  const double to_hz = w.sample_rate_hz / (2.0 * std::numbers::pi);
  for (int f = 0; f < n_frames; ++f) {
    const int start = f * hop;
    const double t = (start + frame_len / 2.0) / w.sample_rate_hz;
    for (int b = 0; b < track.n_subbands(); ++b) {
      double if_sum = 0.0;
      double amp_sum = 0.0;
      int used = 0;
      for (int i = start; i < start + frame_len; ++i) {
        amp_sum += track.envelope(b, i);
        if (track.is_flagged(b, i)) continue;
        if_sum += track.subband_if(b, i);
        ++used;
      }
      const double amp = amp_sum / frame_len;
      if (used == 0 || amp <= 0.0 || amp < p.amp_threshold) continue;
      p.points.push_back(PyknoPoint{t, std::clamp(if_sum / used * to_hz, 0.0, p.nyquist_hz), amp});
    }
  }
  return p;
}

std::string spectrogram_dump(const SpectrogramGrid& g) {
  std::string out;
  char buf[32];
  for (Eigen::Index r = 0; r < g.log_power_db.rows(); ++r) {
    for (Eigen::Index c = 0; c < g.log_power_db.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", g.log_power_db(r, c));
      if (c > 0) out.push_back(' ');
      out.append(buf);
    }
    out.push_back('\n');
  }
  return out;
}

std::string pyknogram_dump(const Pyknogram& p) {
  std::string out;
  char buf[96];
  for (const PyknoPoint& pt : p.points) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", pt.time_s, pt.freq_hz, pt.amplitude);
    out.append(buf);
  }
  return out;
}

namespace {

void check_canvas(const RenderStyle& style) {
  if (style.width < 1 || style.height < 1) throw ValidationError("render canvas must be at least 1x1");
}

// Black -> blue -> red -> yellow -> white.
std::array<unsigned char, 3> heat(double v) {
  static constexpr std::array<std::array<double, 3>, 5> kStops = {{
      {0, 0, 0}, {0, 0, 160}, {200, 0, 0}, {255, 220, 0}, {255, 255, 255}}};
  v = std::clamp(v, 0.0, 1.0) * (kStops.size() - 1);
  const std::size_t i = std::min(static_cast<std::size_t>(v), kStops.size() - 2);
  const double a = v - static_cast<double>(i);
  std::array<unsigned char, 3> c{};
  for (int ch = 0; ch < 3; ++ch) {
    c[ch] = static_cast<unsigned char>(std::lround((1 - a) * kStops[i][ch] + a * kStops[i + 1][ch]));
  }
  return c;
}

}  // namespace

Image rasterize(const SpectrogramGrid& g, const RenderStyle& style) {
  check_canvas(style);
  Image img{style.width, style.height,
            std::vector<unsigned char>(static_cast<std::size_t>(style.width) * style.height * 3, 0)};
  const Eigen::Index n_t = g.log_power_db.rows();
  const Eigen::Index n_f = g.log_power_db.cols();
  if (n_t == 0 || n_f == 0) return img;
  const double top = g.log_power_db.maxCoeff();
  const double bottom = top - style.dynamic_range_db;
  for (int y = 0; y < style.height; ++y) {
    const Eigen::Index k = std::min<Eigen::Index>(n_f - 1, (style.height - 1 - y) * n_f / style.height);
    for (int x = 0; x < style.width; ++x) {
      const Eigen::Index t = std::min<Eigen::Index>(n_t - 1, static_cast<Eigen::Index>(x) * n_t / style.width);
      const double v = style.dynamic_range_db > 0 ? (g.log_power_db(t, k) - bottom) / style.dynamic_range_db : 1.0;
      const auto c = heat(v);
      std::copy(c.begin(), c.end(), img.rgb.begin() + (static_cast<std::size_t>(y) * style.width + x) * 3);
    }
  }
  return img;
}

Image rasterize(const Pyknogram& p, const RenderStyle& style) {
  check_canvas(style);
  Image img{style.width, style.height,
            std::vector<unsigned char>(static_cast<std::size_t>(style.width) * style.height * 3, 255)};
  if (p.points.empty() || p.duration_s <= 0.0 || p.nyquist_hz <= 0.0) return img;
  double peak = 0.0;
  for (const auto& pt : p.points) peak = std::max(peak, pt.amplitude);
  for (const auto& pt : p.points) {
    const int x = std::clamp(static_cast<int>(pt.time_s / p.duration_s * style.width), 0, style.width - 1);
    const int y = std::clamp(style.height - 1 - static_cast<int>(pt.freq_hz / p.nyquist_hz * style.height), 0,
                             style.height - 1);
    const auto shade = static_cast<unsigned char>(std::lround(200.0 * (1.0 - pt.amplitude / peak)));
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int xx = x + dx;
        const int yy = y + dy;
        if (xx < 0 || yy < 0 || xx >= style.width || yy >= style.height) continue;
        unsigned char* px = &img.rgb[(static_cast<std::size_t>(yy) * style.width + xx) * 3];
        for (int ch = 0; ch < 3; ++ch) px[ch] = std::min(px[ch], shade);
      }
    }
  }
  return img;
}

std::string encode_ppm(const Image& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size());
  return out;
}

void render(const SpectrogramGrid& g, const std::filesystem::path& out_path, const RenderStyle& style) {
  io::write_file(out_path, encode_ppm(rasterize(g, style)));
  io::write_file(out_path.string() + ".txt", spectrogram_dump(g));
}

void render(const Pyknogram& p, const std::filesystem::path& out_path, const RenderStyle& style) {
  io::write_file(out_path, encode_ppm(rasterize(p, style)));
  io::write_file(out_path.string() + ".txt", pyknogram_dump(p));
}

}  // namespace maskcue
