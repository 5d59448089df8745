#include "maskcue/corpus.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>

#include "maskcue/binary_io.h"
#include "maskcue/error.h"
#include "maskcue/wav.h"

namespace maskcue {

std::string_view partition_name(Partition p) {
  switch (p) {
    case Partition::kTrain: return "train";
    case Partition::kDev: return "dev";
    case Partition::kTest: return "test";
  }
  return "?";
}

Partition parse_partition(std::string_view text) {
  if (text == "train") return Partition::kTrain;
  if (text == "dev") return Partition::kDev;
  if (text == "test") return Partition::kTest;
  throw ValidationError("unknown partition '" + std::string(text) + "'");
}

std::vector<ManifestEntry> Manifest::in_partition(Partition p) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    if (e.partition == p) out.push_back(e);
  }
  return out;
}

Manifest parse_manifest(const std::string& text, const std::filesystem::path& root) {
  Manifest m;
  m.root = root;
  std::set<std::string> ids;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const std::size_t tab = line.find('\t', start);
      f.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    const std::string where = "manifest line " + std::to_string(line_no);
    if (f.size() != 4) throw ValidationError(where + ": expected 4 tab-separated fields");
    if (f[0].empty() || f[1].empty()) throw ValidationError(where + ": empty id or path");
    ManifestEntry e;
    e.utt_id = f[0];
    e.path = f[1];
    try {
      e.partition = parse_partition(f[2]);
      if (f[3] != "?") e.label = parse_label(f[3]);
    } catch (const ValidationError& err) {
      throw ValidationError(where + ": " + err.what());
    }
    if (!e.label && e.partition != Partition::kTest) {
      throw ValidationError(where + ": " + e.utt_id + " in " +
                            std::string(partition_name(e.partition)) + " has no label");
    }
    if (!ids.insert(e.utt_id).second) throw ValidationError("duplicate utt_id " + e.utt_id);
    m.entries.push_back(std::move(e));
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(io::read_file(path), path.parent_path());
}

std::string format_manifest(const Manifest& m) {
  std::string out;
  for (const auto& e : m.entries) {
    out += e.utt_id + "\t" + e.path + "\t" + std::string(partition_name(e.partition)) + "\t" +
           (e.label ? std::string(label_name(*e.label)) : std::string("?")) + "\n";
  }
  return out;
}

void save_manifest(const std::filesystem::path& path, const Manifest& m) {
  io::write_file(path, format_manifest(m));
}

std::vector<Waveform> segment_1s(const Waveform& w) {
  std::vector<Waveform> out;
  if (w.sample_rate_hz <= 0) return out;
  const std::size_t seg = static_cast<std::size_t>(w.sample_rate_hz);
  for (std::size_t start = 0; start + seg <= w.size(); start += seg) {
    Waveform piece;
    piece.sample_rate_hz = w.sample_rate_hz;
    piece.samples.assign(w.samples.begin() + static_cast<std::ptrdiff_t>(start),
                         w.samples.begin() + static_cast<std::ptrdiff_t>(start + seg));
    out.push_back(std::move(piece));
  }
  return out;
}

void validate(const MaskFilterSpec& spec) {
  if (!std::isfinite(spec.attenuation_db_at_8khz) || spec.attenuation_db_at_8khz < 0.0) {
    throw ValidationError("mask.attenuation_db_at_8khz must be >= 0");
  }
  if (!std::isfinite(spec.tilt_start_hz) || spec.tilt_start_hz <= 0.0 || spec.tilt_start_hz >= 8000.0) {
    throw ValidationError("mask.tilt_start_hz must lie in (0, 8000)");
  }
  if (!std::isfinite(spec.additive_noise_db) || spec.additive_noise_db > 0.0) {
    throw ValidationError("mask.additive_noise_db must be finite and <= 0");
  }
}

double mask_gain_db(double f_hz, const MaskFilterSpec& spec) {
  const double f = std::abs(f_hz);
  if (f <= spec.tilt_start_hz) return 0.0;
  const double span = std::log2(8000.0 / spec.tilt_start_hz);
  const double frac = std::min(std::log2(f / spec.tilt_start_hz) / span, 1.0);
  return -spec.attenuation_db_at_8khz * frac;
}

Waveform apply_mask_filter(const Waveform& clean, const MaskFilterSpec& spec,
                           std::mt19937_64& rng) {
  validate(spec);
  validate(clean);
  const std::size_t n = clean.size();
  std::vector<Complex> spectrum = dft(std::span<const double>(clean.samples));
  for (std::size_t k = 0; k < n; ++k) {
    // Bin k and its mirror n - k share |f|.
    const double bin = static_cast<double>(std::min(k, n - k));
    const double f = bin * clean.sample_rate_hz / static_cast<double>(n);
    spectrum[k] *= std::pow(10.0, mask_gain_db(f, spec) / 20.0);
  }
  const std::vector<Complex> filtered = idft(std::span<const Complex>(spectrum));
  double energy = 0.0;
  for (double s : clean.samples) energy += s * s;
  const double noise_rms =
      std::sqrt(energy / static_cast<double>(n)) * std::pow(10.0, spec.additive_noise_db / 20.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Waveform out;
  out.sample_rate_hz = clean.sample_rate_hz;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = filtered[i].real() + noise_rms * gauss(rng);
  return out;
}

void validate(const SynthConfig& cfg) {
  if (cfg.n_speakers < 1) throw ValidationError("synth.n_speakers must be >= 1");
  if (cfg.utts_per_speaker < 1) throw ValidationError("synth.utts_per_speaker must be >= 1");
  if (cfg.n_test_speakers < 0) throw ValidationError("synth.n_test_speakers must be >= 0");
  if (!(cfg.duration_s >= 0.05) || cfg.duration_s > 600.0) {
    throw ValidationError("synth.duration_s must lie in [0.05, 600]");
  }
  validate(cfg.mask);
}

namespace {

struct Vowel {
  std::array<double, 5> formants_hz;
};

// Adult averages for a handful of vowels, plus a fixed high resonance.
constexpr std::array<Vowel, 5> kVowels = {{
    {{730, 1090, 2440, 3400, 4500}},
    {{270, 2290, 3010, 3700, 4800}},
    {{300, 870, 2240, 3300, 4400}},
    {{530, 1840, 2480, 3500, 4600}},
    {{570, 840, 2410, 3400, 4500}},
}};
constexpr std::array<double, 5> kBandwidthsHz = {80, 100, 150, 250, 350};
constexpr std::array<double, 5> kFormantLevels = {1.0, 0.6, 0.3, 0.18, 0.1};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

// RBJ band-pass biquad (constant 0 dB peak gain).
struct Biquad {
  double b0, b1, b2, a1, a2;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;

  static Biquad bandpass(double centre_hz, double q, double fs) {
    const double w0 = 2.0 * std::numbers::pi * centre_hz / fs;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    return Biquad{alpha / a0, 0.0, -alpha / a0, -2.0 * std::cos(w0) / a0, (1.0 - alpha) / a0};
  }

  double step(double x) {
    const double y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y;
    return y;
  }
};

}  // namespace

Waveform synth_speech(std::mt19937_64& rng, double f0_base_hz, double formant_scale,
                      double duration_s) {
  constexpr int fs = kCorpusSampleRateHz;
  constexpr int kBlock = 16;
  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
  Waveform w;
  w.sample_rate_hz = fs;
  w.samples.assign(n, 0.0);
  if (n == 0) return w;

  // Syllable layout: vowel nuclei separated by short fricatives.
  const int n_syll = 3 + static_cast<int>(rng() % 3);
  std::vector<double> nucleus_t(n_syll);
  std::vector<int> vowel(n_syll);
  for (int s = 0; s < n_syll; ++s) {
    nucleus_t[s] = (s + 0.5 + uniform(rng, -0.15, 0.15)) * duration_s / n_syll;
    vowel[s] = static_cast<int>(rng() % kVowels.size());
  }
  const double vib_rate = uniform(rng, 3.0, 6.0);
  const double vib_phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double vib_depth = uniform(rng, 0.02, 0.06);
  const double breath = uniform(rng, 0.001, 0.003);
  const double syll_width = duration_s / n_syll;

  const auto formant_at = [&](double t, int i) {
    if (t <= nucleus_t.front()) return kVowels[vowel.front()].formants_hz[i] * formant_scale;
    if (t >= nucleus_t.back()) return kVowels[vowel.back()].formants_hz[i] * formant_scale;
    int s = 0;
    while (nucleus_t[s + 1] < t) ++s;
    const double a = (t - nucleus_t[s]) / (nucleus_t[s + 1] - nucleus_t[s]);
    return formant_scale * ((1.0 - a) * kVowels[vowel[s]].formants_hz[i] +
                            a * kVowels[vowel[s + 1]].formants_hz[i]);
  };
  const auto voicing_env = [&](double t) {
    double env = 0.04;
    for (double c : nucleus_t) {
      const double d = (t - c) / (0.45 * syll_width);
      if (std::abs(d) < 1.0) env += 0.5 * (1.0 + std::cos(std::numbers::pi * d));
    }
    return std::min(env, 1.0);
  };

  // Voiced part: coherent harmonics h * phase, amplitudes refreshed per block.
  std::normal_distribution<double> gauss(0.0, 1.0);
  double jitter = 0.0;
  double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  std::vector<double> amp;
  for (std::size_t b = 0; b < n; b += kBlock) {
    const double t = static_cast<double>(b) / fs;
    jitter = 0.95 * jitter + 0.004 * gauss(rng);
    const double f0 = f0_base_hz * (1.0 + vib_depth * std::sin(2.0 * std::numbers::pi * vib_rate * t + vib_phase) -
                                    0.08 * t / duration_s + jitter);
    const int n_harm = std::max(1, static_cast<int>(7800.0 / f0));
    amp.assign(n_harm + 1, 0.0);
    for (int h = 1; h <= n_harm; ++h) {
      const double f = h * f0;
      double g = 0.01;
      for (int i = 0; i < 5; ++i) {
        const double d = (f - formant_at(t, i)) / (0.5 * kBandwidthsHz[i]);
        g += kFormantLevels[i] / std::sqrt(1.0 + d * d);
      }
      amp[h] = g * std::pow(static_cast<double>(h), -1.0);
    }
    const double env = voicing_env(t);
    const double dphi = 2.0 * std::numbers::pi * f0 / fs;
    for (std::size_t i = b; i < std::min(n, b + kBlock); ++i) {
      phase = std::fmod(phase + dphi, 2.0 * std::numbers::pi);
      // sin(h phase) by the Chebyshev recurrence.
      const double c2 = 2.0 * std::cos(phase);
      double s_prev = 0.0;
      double s_cur = std::sin(phase);
      double acc = 0.0;
      for (int h = 1; h <= n_harm; ++h) {
        acc += amp[h] * s_cur;
        const double s_next = c2 * s_cur - s_prev;
        s_prev = s_cur;
        s_cur = s_next;
      }
      w.samples[i] = env * acc;
    }
  }

  // Fricative bursts between nuclei and breath noise throughout.
  double voiced_peak = 0.0;
  for (double s : w.samples) voiced_peak = std::max(voiced_peak, std::abs(s));
  if (voiced_peak == 0.0) voiced_peak = 1.0;
  for (int s = 0; s + 1 < n_syll; ++s) {
    const double centre = 0.5 * (nucleus_t[s] + nucleus_t[s + 1]);
    const double len = uniform(rng, 0.04, 0.09);
    Biquad bp = Biquad::bandpass(uniform(rng, 4000.0, 6500.0), uniform(rng, 0.8, 1.6), fs);
    const double level = uniform(rng, 0.15, 0.4) * voiced_peak;
    const auto first = static_cast<std::size_t>(std::max(0.0, (centre - len / 2) * fs));
    const auto last = std::min(n, static_cast<std::size_t>((centre + len / 2) * fs));
    for (std::size_t i = first; i < last; ++i) {
      const double u = static_cast<double>(i - first) / static_cast<double>(last - first);
      w.samples[i] += level * std::sin(std::numbers::pi * u) * bp.step(gauss(rng));
    }
  }
  double hp_prev_in = 0.0;
  double hp_prev_out = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = gauss(rng);
    const double y = 0.9 * (hp_prev_out + x - hp_prev_in);
    hp_prev_in = x;
    hp_prev_out = y;
    w.samples[i] += breath * voiced_peak * voicing_env(static_cast<double>(i) / fs) * y;
  }

  double peak = 0.0;
  for (double s : w.samples) peak = std::max(peak, std::abs(s));
  const double target = uniform(rng, 0.3, 0.7);
  for (double& s : w.samples) s *= target / peak;
  return w;
}

SynthResult synth_corpus(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  validate(cfg);
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "wav", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "wav").string() + ": " + ec.message());

  SynthResult result;
  result.manifest.root = out_dir;
  const int n_train = (cfg.n_speakers + 1) / 2;
  const int total = cfg.n_speakers + cfg.n_test_speakers;
  const auto seed_lo = static_cast<std::uint32_t>(cfg.seed & 0xffffffffu);
  const auto seed_hi = static_cast<std::uint32_t>(cfg.seed >> 32);
  for (int spk = 0; spk < total; ++spk) {
    char name[16];
    std::snprintf(name, sizeof name, "spk%02d", spk);
    const Partition part = spk < n_train           ? Partition::kTrain
                           : spk < cfg.n_speakers ? Partition::kDev
                                                  : Partition::kTest;
    (part == Partition::kTrain ? result.train_speakers
     : part == Partition::kDev ? result.dev_speakers
                               : result.test_speakers)
        .push_back(name);

    std::seed_seq spk_seq{seed_lo, seed_hi, static_cast<std::uint32_t>(spk)};
    std::mt19937_64 spk_rng(spk_seq);
    const double f0_base = uniform(spk_rng, 110.0, 220.0);
    const double formant_scale = uniform(spk_rng, 0.88, 1.12);

    for (int u = 0; u < cfg.utts_per_speaker; ++u) {
      std::seed_seq utt_seq{seed_lo, seed_hi, static_cast<std::uint32_t>(spk),
                            static_cast<std::uint32_t>(u)};
      std::mt19937_64 rng(utt_seq);
      const Waveform clean = synth_speech(rng, f0_base, formant_scale, cfg.duration_s);
      const Waveform masked = apply_mask_filter(clean, cfg.mask, rng);
      char stem[48];
      std::snprintf(stem, sizeof stem, "%s_u%03d", name, u);
      for (const Label label : {Label::kNoMask, Label::kMask}) {
        ManifestEntry e;
        e.utt_id = std::string(stem) + "_" + std::string(label_name(label));
        e.path = "wav/" + e.utt_id + ".wav";
        e.partition = part;
        if (part != Partition::kTest || !cfg.blind_test) e.label = label;
        save_wav(out_dir / e.path, label == Label::kMask ? masked : clean);
        result.manifest.entries.push_back(std::move(e));
      }
    }
  }
  save_manifest(out_dir / "manifest.tsv", result.manifest);

  char meta[512];
  std::snprintf(meta, sizeof meta,
                "seed = %llu\nn_speakers = %d\nutts_per_speaker = %d\nn_test_speakers = %d\n"
                "blind_test = %s\nduration_s = %.17g\nsample_rate_hz = %d\n"
                "attenuation_db_at_8khz = %.17g\ntilt_start_hz = %.17g\nadditive_noise_db = %.17g\n",
                static_cast<unsigned long long>(cfg.seed), cfg.n_speakers, cfg.utts_per_speaker,
                cfg.n_test_speakers, cfg.blind_test ? "true" : "false", cfg.duration_s,
                kCorpusSampleRateHz, cfg.mask.attenuation_db_at_8khz, cfg.mask.tilt_start_hz,
                cfg.mask.additive_noise_db);
  io::write_file(out_dir / "synth_meta.txt", meta);
  return result;
}

}  // namespace maskcue
