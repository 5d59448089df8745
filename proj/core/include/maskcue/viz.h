// Spectrogram and pyknogram diagnostics, written as PPM images with a plain
// text sidecar holding the exact data.

#ifndef MASKCUE_VIZ_H_
#define MASKCUE_VIZ_H_

#include <filesystem>
#include <string>
#include <vector>

#include "maskcue/signal.h"

namespace maskcue {

struct SpectrogramConfig {
  double frame_ms = 20.0;
  double hop_ms = 10.0;
  int n_fft = 512;
  double floor_db = -120.0;
};

struct SpectrogramGrid {
  std::vector<double> times_s;   // frame centres
  std::vector<double> freqs_hz;  // bin frequencies
  Matrix log_power_db;           // n_frames x (n_fft/2 + 1)
};

SpectrogramGrid compute_spectrogram(const Waveform& w, const SpectrogramConfig& cfg = {});

struct PyknogramConfig {
  double frame_ms = 20.0;
  double hop_ms = 10.0;
  int n_subbands = 60;
  double fmin_hz = 0.0;
  double fmax_hz = 8000.0;
  double amp_threshold_ratio = 0.05;  // of the utterance peak envelope
};

struct PyknoPoint {
  double time_s = 0.0;
  double freq_hz = 0.0;
  double amplitude = 0.0;
};

struct Pyknogram {
  std::vector<PyknoPoint> points;
  int n_subbands = 0;
  double amp_threshold = 0.0;
  double nyquist_hz = 8000.0;
  double duration_s = 0.0;
};

/// One candidate point per subband per frame: the frame-mean instantaneous
/// frequency at the frame-mean envelope, kept when the envelope reaches the
/// threshold. Uses the same subband decomposition as IFCC.
Pyknogram compute_pyknogram(const Waveform& w, const PyknogramConfig& cfg = {});

struct RenderStyle {
  int width = 640;
  int height = 320;
  double dynamic_range_db = 80.0;
};

/// Row-major dB grid, one frame per line, %.17g.
std::string spectrogram_dump(const SpectrogramGrid& g);
/// "time freq amplitude" per line, %.17g.
std::string pyknogram_dump(const Pyknogram& p);

struct Image {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> rgb;  // width * height * 3
};

Image rasterize(const SpectrogramGrid& g, const RenderStyle& style);
Image rasterize(const Pyknogram& p, const RenderStyle& style);
std::string encode_ppm(const Image& img);

/// Writes `out_path` (binary PPM) and `out_path` + ".txt" (data dump).
void render(const SpectrogramGrid& g, const std::filesystem::path& out_path,
            const RenderStyle& style = {});
void render(const Pyknogram& p, const std::filesystem::path& out_path,
            const RenderStyle& style = {});

}  // namespace maskcue

#endif  // MASKCUE_VIZ_H_
