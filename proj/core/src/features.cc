#include "maskcue/features.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "maskcue/error.h"

namespace maskcue {

namespace {

constexpr int kSampleRateHz = 16000;

void require_16k(const Waveform& w) {
  validate(w);
  if (w.sample_rate_hz != kSampleRateHz) {
    throw ValidationError("feature extraction expects 16000 Hz audio, got " +
                          std::to_string(w.sample_rate_hz) + " Hz");
  }
}

void require_frames(int n_frames) {
  if (n_frames < 1) throw ValidationError("signal is shorter than one analysis frame");
}

Matrix log_floored(const Matrix& m) {
  return m.unaryExpr([](double v) { return std::log(std::max(v, kLogPowerFloor)); });
}

}  // namespace

std::string_view feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kLfcc: return "LFCC";
    case FeatureKind::kMfcc: return "MFCC";
    case FeatureKind::kIfcc: return "IFCC";
    case FeatureKind::kCqcc: return "CQCC";
  }
  return "?";
}

FeatureKind parse_feature_kind(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (FeatureKind k : kAllFeatureKinds) {
    if (feature_kind_name(k) == upper) return k;
  }
  throw ValidationError("unknown feature kind '" + std::string(name) + "'");
}

namespace detail {

class ExtractorEngine {
 public:
  virtual ~ExtractorEngine() = default;
  virtual FeatureMatrix run(const Waveform& w) const = 0;
};

}  // namespace detail

namespace {

class CepstralEngine final : public detail::ExtractorEngine {
 public:
  CepstralEngine(FeatureKind kind, const CepstralConfig& cfg)
      : kind_(kind),
        cfg_(cfg),
        bank_(build_filterbank(kind == FeatureKind::kMfcc ? FilterScale::kMel : FilterScale::kLinear,
                               cfg.n_filters, cfg.n_fft, kSampleRateHz, cfg.fmin_hz,
                               cfg.fmax_hz)),
        dct_(cfg.n_filters, cfg.n_ceps) {}

  Matrix energies(const Waveform& w) const {
    require_16k(w);
    Waveform src = w;
    if (cfg_.pre_emphasis) src.samples = pre_emphasis(w.samples, cfg_.pre_emphasis_coeff);
    const FrameSequence frames =
        frame_signal(src, cfg_.frame_ms, cfg_.hop_ms, WindowKind::kRaisedCosine);
    require_frames(frames.count());
    Matrix power(frames.count(), cfg_.n_fft / 2 + 1);
    for (int f = 0; f < frames.count(); ++f) {
      const Eigen::RowVectorXd row = frames.frames.row(f);
      const std::vector<double> p =
          power_spectrum(std::span<const double>(row.data(), row.size()), cfg_.n_fft);
      power.row(f) = Eigen::Map<const Eigen::RowVectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
    }
    return power * bank_.weights.transpose();
  }

  FeatureMatrix run(const Waveform& w) const override {
    FeatureMatrix out;
    out.kind = kind_;
    out.hop_ms = cfg_.hop_ms;
    out.values = dct_.apply(log_floored(energies(w)));
    return out;
  }

 private:
  FeatureKind kind_;
  CepstralConfig cfg_;
  TriangularFilterBank bank_;
  DctMatrix dct_;
};

class IfccEngine final : public detail::ExtractorEngine {
 public:
  explicit IfccEngine(const IfccConfig& cfg) : cfg_(cfg), dct_(cfg.n_subbands, cfg.n_ceps) {}

  FeatureMatrix run(const Waveform& w) const override {
    require_16k(w);
    const int frame_len = ms_to_samples(cfg_.frame_ms, w.sample_rate_hz);
    const int hop = ms_to_samples(cfg_.hop_ms, w.sample_rate_hz);
    require_frames(frame_count(w.size(), frame_len, hop));
    const InstFreqTrack track = subband_instantaneous_frequency(
        w, cfg_.n_subbands, cfg_.fmin_hz, cfg_.fmax_hz, cfg_.denominator_floor);
    FeatureMatrix out;
    out.kind = FeatureKind::kIfcc;
    out.hop_ms = cfg_.hop_ms;
    out.values = dct_.apply(pooled_instantaneous_frequency(track, frame_len, hop));
    return out;
  }

 private:
  IfccConfig cfg_;
  DctMatrix dct_;
};

class CqccEngine final : public detail::ExtractorEngine {
 public:
  explicit CqccEngine(const CqccConfig& cfg)
      : cfg_(cfg),
        kernel_(kSampleRateHz, cfg.fmin_hz, cfg.fmax_hz, cfg.bins_per_octave),
        resampler_(kernel_, cfg.resample_period),
        dct_(resampler_.size(), cfg.n_ceps) {}

  Matrix uniform_log_power(const Waveform& w) const {
    require_16k(w);
    const int frame_len = ms_to_samples(cfg_.frame_ms, w.sample_rate_hz);
    const int hop = ms_to_samples(cfg_.hop_ms, w.sample_rate_hz);
    require_frames(frame_count(w.size(), frame_len, hop));
    const CqtSpectrogram spec = cqt(w, kernel_, frame_len, hop);
    return resampler_.apply(cqt_log_power(spec));
  }

  FeatureMatrix run(const Waveform& w) const override {
    FeatureMatrix out;
    out.kind = FeatureKind::kCqcc;
    out.hop_ms = cfg_.hop_ms;
    out.values = dct_.apply(uniform_log_power(w));
    return out;
  }

 private:
  CqccConfig cfg_;
  CqtKernel kernel_;
  UniformResampler resampler_;
  DctMatrix dct_;
};

std::shared_ptr<const detail::ExtractorEngine> make_engine(FeatureKind kind,
                                                           const FeatureConfig& cfg) {
  switch (kind) {
    case FeatureKind::kLfcc: return std::make_shared<CepstralEngine>(kind, cfg.lfcc);
    case FeatureKind::kMfcc: return std::make_shared<CepstralEngine>(kind, cfg.mfcc);
    case FeatureKind::kIfcc: return std::make_shared<IfccEngine>(cfg.ifcc);
    case FeatureKind::kCqcc: return std::make_shared<CqccEngine>(cfg.cqcc);
  }
  throw ValidationError("unknown feature kind");
}

}  // namespace

Matrix filterbank_energies(const Waveform& w, const CepstralConfig& cfg, FilterScale scale) {
  const CepstralEngine engine(
      scale == FilterScale::kMel ? FeatureKind::kMfcc : FeatureKind::kLfcc, cfg);
  return engine.energies(w);
}

FeatureMatrix extract_lfcc(const Waveform& w, const CepstralConfig& cfg) {
  return CepstralEngine(FeatureKind::kLfcc, cfg).run(w);
}

FeatureMatrix extract_mfcc(const Waveform& w, const CepstralConfig& cfg) {
  return CepstralEngine(FeatureKind::kMfcc, cfg).run(w);
}

FeatureMatrix extract_ifcc(const Waveform& w, const IfccConfig& cfg) {
  return IfccEngine(cfg).run(w);
}

FeatureMatrix extract_cqcc(const Waveform& w, const CqccConfig& cfg) {
  return CqccEngine(cfg).run(w);
}

Matrix cqcc_uniform_log_power(const Waveform& w, const CqccConfig& cfg) {
  return CqccEngine(cfg).uniform_log_power(w);
}

Matrix pooled_instantaneous_frequency(const InstFreqTrack& track, int frame_len, int hop) {
  const int n_frames = frame_count(static_cast<std::size_t>(track.n_samples()), frame_len, hop);
  Matrix pooled = Matrix::Zero(n_frames, track.n_subbands());
  for (int b = 0; b < track.n_subbands(); ++b) {
    for (int f = 0; f < n_frames; ++f) {
      double sum = 0.0;
      int used = 0;
      const int start = f * hop;
      for (int i = start; i < start + frame_len; ++i) {
        if (track.is_flagged(b, i)) continue;
        sum += track.subband_if(b, i);
        ++used;
      }
      pooled(f, b) = used > 0 ? sum / used : 0.0;
    }
  }
  return pooled;
}

FeatureMatrix append_deltas(const FeatureMatrix& f, int delta_window) {
  if (delta_window < 1) throw ValidationError("delta window must be >= 1");
  const int n = f.n_frames();
  if (n < 2 * delta_window + 1) {
    throw ValidationError("need at least " + std::to_string(2 * delta_window + 1) +
                          " frames for deltas, got " + std::to_string(n));
  }
  double denom = 0.0;
  for (int i = 1; i <= delta_window; ++i) denom += 2.0 * i * i;
  const auto delta = [&](const Matrix& c) {
    Matrix d = Matrix::Zero(c.rows(), c.cols());
    for (int t = 0; t < n; ++t) {
      for (int i = 1; i <= delta_window; ++i) {
        const int ahead = std::min(t + i, n - 1);
        const int behind = std::max(t - i, 0);
        d.row(t) += i * (c.row(ahead) - c.row(behind));
      }
    }
    return Matrix(d / denom);
  };
  const Matrix d1 = delta(f.values);
  const Matrix d2 = delta(d1);
  FeatureMatrix out;
  out.kind = f.kind;
  out.hop_ms = f.hop_ms;
  out.values.resize(n, 3 * f.dim());
  out.values << f.values, d1, d2;
  return out;
}

FeatureExtractor::FeatureExtractor(FeatureKind kind, const FeatureConfig& cfg)
    : kind_(kind), delta_window_(cfg.delta_window), engine_(make_engine(kind, cfg)) {}

FeatureMatrix FeatureExtractor::static_features(const Waveform& w) const {
  return engine_->run(w);
}

FeatureMatrix FeatureExtractor::operator()(const Waveform& w) const {
  return append_deltas(engine_->run(w), delta_window_);
}

}  // namespace maskcue
