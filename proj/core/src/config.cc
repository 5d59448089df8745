#include "maskcue/config.h"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "maskcue/binary_io.h"
#include "maskcue/error.h"

namespace maskcue {

namespace {

struct Binding {
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

using Bindings = std::map<std::string, std::map<std::string, Binding>>;

std::string show(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw ValidationError("config " + key + ": expected a number, got '" + text + "'");
  }
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
    throw ValidationError("config " + key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ValidationError("config " + key + ": expected true/false, got '" + text + "'");
}

Binding bind_field(const std::string& key, double& field) {
  return {[&field, key](const std::string& s) { field = to_double(key, s); },
          [&field] { return show(field); }};
}

Binding bind_field(const std::string& key, int& field) {
  return {[&field, key](const std::string& s) {
            const long long v = to_integer(key, s);
            if (v < -2147483647LL || v > 2147483647LL) throw ValidationError("config " + key + ": out of range");
            field = static_cast<int>(v);
          },
          [&field] { return std::to_string(field); }};
}

Binding bind_field(const std::string& key, std::uint64_t& field) {
  return {[&field, key](const std::string& s) {
            const long long v = to_integer(key, s);
            if (v < 0) throw ValidationError("config " + key + ": must be non-negative");
            field = static_cast<std::uint64_t>(v);
          },
          [&field] { return std::to_string(field); }};
}

Binding bind_field(const std::string& key, bool& field) {
  return {[&field, key](const std::string& s) { field = to_bool(key, s); },
          [&field] { return std::string(field ? "true" : "false"); }};
}

Binding bind_path(std::filesystem::path& field, const std::filesystem::path& base) {
  return {[&field, base](const std::string& s) {
            const std::filesystem::path p(s);
            field = p.is_absolute() || base.empty() ? p : base / p;
          },
          [&field] { return field.string(); }};
}

void bind_cepstral(Bindings& b, const std::string& section, CepstralConfig& c) {
  auto& s = b[section];
  const auto k = [&](const char* name) { return section + "." + name; };
  s["frame_ms"] = bind_field(k("frame_ms"), c.frame_ms);
  s["hop_ms"] = bind_field(k("hop_ms"), c.hop_ms);
  s["n_fft"] = bind_field(k("n_fft"), c.n_fft);
  s["n_filters"] = bind_field(k("n_filters"), c.n_filters);
  s["fmin_hz"] = bind_field(k("fmin_hz"), c.fmin_hz);
  s["fmax_hz"] = bind_field(k("fmax_hz"), c.fmax_hz);
  s["n_ceps"] = bind_field(k("n_ceps"), c.n_ceps);
  s["pre_emphasis"] = bind_field(k("pre_emphasis"), c.pre_emphasis);
  s["pre_emphasis_coeff"] = bind_field(k("pre_emphasis_coeff"), c.pre_emphasis_coeff);
}

Bindings make_bindings(PipelineConfig& cfg, const std::filesystem::path& base) {
  Bindings b;
  b["paths"]["corpus_root"] = bind_path(cfg.corpus_root, base);
  b["paths"]["work_dir"] = bind_path(cfg.work_dir, base);
  b["paths"]["manifest"] = bind_path(cfg.manifest, base);

  auto& sy = b["synth"];
  sy["n_speakers"] = bind_field("synth.n_speakers", cfg.synth.n_speakers);
  sy["utts_per_speaker"] = bind_field("synth.utts_per_speaker", cfg.synth.utts_per_speaker);
  sy["n_test_speakers"] = bind_field("synth.n_test_speakers", cfg.synth.n_test_speakers);
  sy["blind_test"] = bind_field("synth.blind_test", cfg.synth.blind_test);
  sy["duration_s"] = bind_field("synth.duration_s", cfg.synth.duration_s);
  sy["seed"] = bind_field("synth.seed", cfg.synth.seed);
  sy["attenuation_db_at_8khz"] = bind_field("synth.attenuation_db_at_8khz", cfg.synth.mask.attenuation_db_at_8khz);
  sy["tilt_start_hz"] = bind_field("synth.tilt_start_hz", cfg.synth.mask.tilt_start_hz);
  sy["additive_noise_db"] = bind_field("synth.additive_noise_db", cfg.synth.mask.additive_noise_db);

  b["features"]["delta_window"] = bind_field("features.delta_window", cfg.features.delta_window);
  bind_cepstral(b, "lfcc", cfg.features.lfcc);
  bind_cepstral(b, "mfcc", cfg.features.mfcc);

  auto& fi = b["ifcc"];
  IfccConfig& ic = cfg.features.ifcc;
  fi["frame_ms"] = bind_field("ifcc.frame_ms", ic.frame_ms);
  fi["hop_ms"] = bind_field("ifcc.hop_ms", ic.hop_ms);
  fi["n_subbands"] = bind_field("ifcc.n_subbands", ic.n_subbands);
  fi["fmin_hz"] = bind_field("ifcc.fmin_hz", ic.fmin_hz);
  fi["fmax_hz"] = bind_field("ifcc.fmax_hz", ic.fmax_hz);
  fi["n_ceps"] = bind_field("ifcc.n_ceps", ic.n_ceps);
  fi["denominator_floor"] = bind_field("ifcc.denominator_floor", ic.denominator_floor);

  auto& fc = b["cqcc"];
  CqccConfig& cc = cfg.features.cqcc;
  fc["frame_ms"] = bind_field("cqcc.frame_ms", cc.frame_ms);
  fc["hop_ms"] = bind_field("cqcc.hop_ms", cc.hop_ms);
  fc["bins_per_octave"] = bind_field("cqcc.bins_per_octave", cc.bins_per_octave);
  fc["fmin_hz"] = bind_field("cqcc.fmin_hz", cc.fmin_hz);
  fc["fmax_hz"] = bind_field("cqcc.fmax_hz", cc.fmax_hz);
  fc["resample_period"] = bind_field("cqcc.resample_period", cc.resample_period);
  fc["n_ceps"] = bind_field("cqcc.n_ceps", cc.n_ceps);

  auto& g = b["gmm"];
  g["n_components"] = bind_field("gmm.n_components", cfg.gmm.n_components);
  g["seed"] = bind_field("gmm.seed", cfg.gmm.seed);
  g["max_iters"] = bind_field("gmm.max_iters", cfg.gmm.max_iters);
  g["tol"] = bind_field("gmm.tol", cfg.gmm.tol);
  g["floor_scale"] = bind_field("gmm.floor_scale", cfg.gmm.floor_scale);
  g["kmeans_iters"] = bind_field("gmm.kmeans_iters", cfg.gmm.kmeans_iters);

  auto& f = b["fusion"];
  f["l2"] = bind_field("fusion.l2", cfg.fusion.l2);
  f["max_iters"] = bind_field("fusion.max_iters", cfg.fusion.max_iters);
  f["tol"] = bind_field("fusion.tol", cfg.fusion.tol);
  f["systems"] = Binding{
      [&cfg](const std::string& s) {
        cfg.systems.clear();
        std::stringstream in(s);
        std::string item;
        while (std::getline(in, item, ',')) {
          const auto first = item.find_first_not_of(" \t");
          const auto last = item.find_last_not_of(" \t");
          if (first == std::string::npos) continue;
          const FeatureKind kind = parse_feature_kind(item.substr(first, last - first + 1));
          for (FeatureKind existing : cfg.systems) {
            if (existing == kind) throw ValidationError("config fusion.systems: duplicate " + item);
          }
          cfg.systems.push_back(kind);
        }
      },
      [&cfg] {
        std::string out;
        for (std::size_t i = 0; i < cfg.systems.size(); ++i) {
          if (i > 0) out += ",";
          out += feature_kind_name(cfg.systems[i]);
        }
        return out;
      }};

  auto& v = b["viz"];
  v["width"] = bind_field("viz.width", cfg.render.width);
  v["height"] = bind_field("viz.height", cfg.render.height);
  v["dynamic_range_db"] = bind_field("viz.dynamic_range_db", cfg.render.dynamic_range_db);
  v["amp_threshold_ratio"] = bind_field("viz.amp_threshold_ratio", cfg.pyknogram.amp_threshold_ratio);
  v["n_fft"] = bind_field("viz.n_fft", cfg.spectrogram.n_fft);
  return b;
}

}  // namespace

PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  PipelineConfig cfg;
  const Bindings bindings = make_bindings(cfg, base_dir);
  for (const auto& [section, keys] : tree) {
    const auto sec = bindings.find(section);
    if (sec == bindings.end()) {
      if (keys.empty()) throw ValidationError("config: key '" + section + "' outside any section");
      throw ValidationError("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : keys) {
      const auto b = sec->second.find(key);
      if (b == sec->second.end()) throw ValidationError("config: unknown key " + section + "." + key);
      b->second.set(value.get_value<std::string>());
    }
  }
  validate(cfg);
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return parse_config(io::read_file(path), path.parent_path());
}

std::string format_config(const PipelineConfig& cfg) {
  PipelineConfig copy = cfg;
  const Bindings bindings = make_bindings(copy, {});
  std::string out;
  for (const auto& [section, keys] : bindings) {
    out += "[" + section + "]\n";
    for (const auto& [key, b] : keys) out += key + " = " + b.get() + "\n";
    out += "\n";
  }
  return out;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("config " + what);
}

void validate_cepstral(const std::string& s, const CepstralConfig& c) {
  require(c.hop_ms > 0 && c.frame_ms >= c.hop_ms, s + ".frame_ms/hop_ms: need frame_ms >= hop_ms > 0");
  require(is_power_of_two(c.n_fft), s + ".n_fft must be a power of two");
  require(ms_to_samples(c.frame_ms, 16000) <= c.n_fft, s + ".n_fft must cover one frame");
  require(c.n_filters >= 2, s + ".n_filters must be >= 2");
  require(c.n_ceps >= 1 && c.n_ceps <= c.n_filters, s + ".n_ceps must lie in [1, n_filters]");
  require(c.fmin_hz >= 0 && c.fmin_hz < c.fmax_hz && c.fmax_hz <= 8000, s + ".fmin_hz/fmax_hz out of range");
}

}  // namespace

void validate(const PipelineConfig& cfg) {
  validate(cfg.synth);
  const FeatureConfig& f = cfg.features;
  require(f.delta_window >= 1, "features.delta_window must be >= 1");
  validate_cepstral("lfcc", f.lfcc);
  validate_cepstral("mfcc", f.mfcc);
  require(f.ifcc.hop_ms > 0 && f.ifcc.frame_ms >= f.ifcc.hop_ms, "ifcc.frame_ms/hop_ms: need frame_ms >= hop_ms > 0");
  require(f.ifcc.n_subbands >= 1, "ifcc.n_subbands must be >= 1");
  require(f.ifcc.n_ceps >= 1 && f.ifcc.n_ceps <= f.ifcc.n_subbands, "ifcc.n_ceps must lie in [1, n_subbands]");
  require(f.ifcc.fmin_hz >= 0 && f.ifcc.fmin_hz < f.ifcc.fmax_hz && f.ifcc.fmax_hz <= 8000,
          "ifcc.fmin_hz/fmax_hz out of range");
  require(f.ifcc.denominator_floor > 0, "ifcc.denominator_floor must be > 0");
  require(f.cqcc.hop_ms > 0 && f.cqcc.frame_ms >= f.cqcc.hop_ms, "cqcc.frame_ms/hop_ms: need frame_ms >= hop_ms > 0");
  require(f.cqcc.bins_per_octave >= 1, "cqcc.bins_per_octave must be >= 1");
  require(f.cqcc.fmin_hz > 0 && f.cqcc.fmin_hz < f.cqcc.fmax_hz && f.cqcc.fmax_hz <= 8000,
          "cqcc.fmin_hz/fmax_hz out of range");
  require(f.cqcc.resample_period >= 1, "cqcc.resample_period must be >= 1");
  require(f.cqcc.n_ceps >= 1, "cqcc.n_ceps must be >= 1");
  require(cfg.gmm.n_components >= 1, "gmm.n_components must be >= 1");
  require(cfg.gmm.max_iters >= 0, "gmm.max_iters must be >= 0");
  require(cfg.gmm.tol > 0, "gmm.tol must be > 0");
  require(cfg.gmm.floor_scale > 0, "gmm.floor_scale must be > 0");
  require(cfg.gmm.kmeans_iters >= 0, "gmm.kmeans_iters must be >= 0");
  require(cfg.fusion.l2 > 0, "fusion.l2 must be > 0");
  require(cfg.fusion.max_iters >= 1, "fusion.max_iters must be >= 1");
  require(cfg.fusion.tol > 0, "fusion.tol must be > 0");
  require(!cfg.systems.empty(), "fusion.systems must name at least one feature");
  require(cfg.render.width >= 1 && cfg.render.height >= 1, "viz.width/height must be >= 1");
  require(cfg.render.dynamic_range_db > 0, "viz.dynamic_range_db must be > 0");
  require(cfg.pyknogram.amp_threshold_ratio >= 0, "viz.amp_threshold_ratio must be >= 0");
  require(is_power_of_two(cfg.spectrogram.n_fft) && cfg.spectrogram.n_fft >= 320,
          "viz.n_fft must be a power of two covering one frame");
}

std::string feature_fingerprint(FeatureKind kind, const FeatureConfig& cfg) {
  std::string out = std::string(feature_kind_name(kind)) + ";delta=" + std::to_string(cfg.delta_window);
  const auto cep = [&](const CepstralConfig& c) {
    out += ";frame=" + show(c.frame_ms) + ";hop=" + show(c.hop_ms) + ";nfft=" + std::to_string(c.n_fft) +
           ";filters=" + std::to_string(c.n_filters) + ";fmin=" + show(c.fmin_hz) + ";fmax=" + show(c.fmax_hz) +
           ";ceps=" + std::to_string(c.n_ceps) + ";preemph=" + (c.pre_emphasis ? show(c.pre_emphasis_coeff) : "off");
  };
  switch (kind) {
    case FeatureKind::kLfcc: cep(cfg.lfcc); break;
    case FeatureKind::kMfcc: cep(cfg.mfcc); break;
    case FeatureKind::kIfcc: {
      const IfccConfig& c = cfg.ifcc;
      out += ";frame=" + show(c.frame_ms) + ";hop=" + show(c.hop_ms) + ";subbands=" + std::to_string(c.n_subbands) +
             ";fmin=" + show(c.fmin_hz) + ";fmax=" + show(c.fmax_hz) + ";ceps=" + std::to_string(c.n_ceps) +
             ";floor=" + show(c.denominator_floor);
      break;
    }
    case FeatureKind::kCqcc: {
      const CqccConfig& c = cfg.cqcc;
      out += ";frame=" + show(c.frame_ms) + ";hop=" + show(c.hop_ms) + ";B=" + std::to_string(c.bins_per_octave) +
             ";fmin=" + show(c.fmin_hz) + ";fmax=" + show(c.fmax_hz) + ";d=" + std::to_string(c.resample_period) +
             ";ceps=" + std::to_string(c.n_ceps);
      break;
    }
  }
  return out;
}

std::string gmm_fingerprint(const GmmConfig& cfg) {
  return "M=" + std::to_string(cfg.n_components) + ";seed=" + std::to_string(cfg.seed) +
         ";iters=" + std::to_string(cfg.max_iters) + ";tol=" + show(cfg.tol) +
         ";floor=" + show(cfg.floor_scale) + ";kmeans=" + std::to_string(cfg.kmeans_iters);
}

}  // namespace maskcue
