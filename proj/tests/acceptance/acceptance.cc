// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.
//
//   maskcue_acceptance --golden <uar_table template> --work <scratch dir> [--only N]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "maskcue/config.h"
#include "maskcue/cqt.h"
#include "maskcue/features.h"
#include "maskcue/fusion.h"
#include "maskcue/gmm.h"
#include "maskcue/inst_freq.h"
#include "maskcue/metrics.h"
#include "maskcue/pipeline.h"
#include "maskcue/signal.h"
#include "oracles.h"

namespace fs = std::filesystem;
using namespace maskcue;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// 1. Instantaneous frequency of single-bin analytic signals.
Outcome check_inst_freq() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> length(8, 2048);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = length(rng);
    const int k0 = 1 + static_cast<int>(unit(rng) * (n / 2 - 1));
    const double amp = 0.01 + 10.0 * unit(rng);
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    AnalyticSpectrum z;
    z.bins.assign(n, Complex(0.0, 0.0));
    // z[n] = amp exp(j (2 pi k0 n / N + phase))  <=>  Z[k0] = N amp e^{j phase}
    z.bins[k0] = std::polar(amp * n, phase);
    const InstFreq f = instantaneous_frequency(z);
    const double expected = 2.0 * std::numbers::pi * k0 / n;
    for (double th : f.theta) worst = std::max(worst, std::abs(th - expected));
    if (f.n_flagged != 0) return {false, "flagged samples on a constant-envelope signal"};
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 5.0, fmt("max |dev| %.3g rad over 100 signals, %.2f s", worst, secs)};
}

// 2. Optimized constant-Q transform against direct summation.
Outcome check_cqt() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  const int bins_choices[] = {6, 12, 24};
  double worst = 0.0;
  int max_bins = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int b = bins_choices[trial % 3];
    // 48 / b octaves below Nyquist, raised by a random fraction of a bin: 48 bins.
    const double offset = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    const double fmin = 8000.0 / std::pow(2.0, (48.0 - offset) / b);
    const oracle::CqtParams p{16000, fmin, 8000.0, b};
    const CqtKernel kernel(16000, fmin, 8000.0, b);
    max_bins = std::max(max_bins, kernel.bin_count());
    if (kernel.bin_count() > 48) return {false, "kernel has more than 48 bins"};
    Waveform w;
    w.samples = oracle::random_signal(4000, 300 + trial, 0.5);
    const CqtSpectrogram spec = cqt(w, kernel, 320, 160);
    const auto ref = oracle::cqt(w.samples, p, spec.centers);
    for (int k = 0; k < kernel.bin_count(); ++k) {
      for (std::size_t j = 0; j < spec.centers.size(); ++j) {
        const std::complex<double> r = ref[k][j];
        worst = std::max(worst, std::abs(spec.y(k, j) - r) / std::abs(r));
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-8 && secs < 60.0,
          fmt("max relative error %.3g over 20 signals (up to %.0f bins), %.2f s", worst, max_bins, secs)};
}

// 3. Parseval and DCT round trip.
Outcome check_dsp_identities() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> length(2, 4096);
  double parseval = 0.0, dct = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = length(rng);
    const std::vector<double> x = oracle::random_signal(n, 500 + trial, 1.0);
    double time_energy = 0.0;
    for (double v : x) time_energy += v * v;
    double freq_energy = 0.0;
    for (const Complex& c : dft(std::span<const double>(x))) freq_energy += std::norm(c);
    parseval = std::max(parseval, std::abs(time_energy - freq_energy / n) / time_energy);
    const std::vector<double> back = idct2_orthonormal(dct2_orthonormal(x, n), n);
    for (int i = 0; i < n; ++i) dct = std::max(dct, std::abs(back[i] - x[i]));
  }
  const double secs = seconds_since(t0);
  return {parseval <= 1e-10 && dct <= 1e-10 && secs < 5.0,
          fmt("Parseval rel %.3g, DCT round trip %.3g, %.2f s", parseval, dct, secs)};
}

// 4. EM log-likelihood monotonicity.
Outcome check_em_monotone() {
  const auto t0 = Clock::now();
  double worst_drop = 0.0;
  int iterations = 0;
  for (int run = 0; run < 50; ++run) {
    const int m = 1 << (run % 4);
    std::mt19937_64 rng(400 + run);
    std::normal_distribution<double> g;
    Matrix x(1500, 4);
    for (int i = 0; i < x.rows(); ++i) {
      const double shift = 3.0 * static_cast<double>(i % 3);
      for (int d = 0; d < x.cols(); ++d) x(i, d) = shift * (d % 2 ? 1.0 : -0.5) + g(rng) * (1.0 + 0.3 * d);
    }
    GmmConfig cfg;
    cfg.n_components = m;
    cfg.seed = static_cast<std::uint64_t>(run);
    cfg.max_iters = 60;
    cfg.tol = 1e-14;
    const GmmTrainResult r = em_train(x, cfg);
    iterations += r.iterations;
    for (std::size_t i = 1; i < r.log_likelihood.size(); ++i) {
      worst_drop = std::max(worst_drop, r.log_likelihood[i - 1] - r.log_likelihood[i]);
    }
  }
  const double secs = seconds_since(t0);
  return {worst_drop <= 1e-8 && secs < 60.0,
          fmt("largest per-iteration decrease %.3g over 50 runs (%.0f EM iterations), %.2f s", worst_drop,
              iterations, secs)};
}

ConfusionMatrix counts(long nn, long nm, long mn, long mm) {
  ConfusionMatrix cm;
  cm.counts = {{{nn, nm}, {mn, mm}}};
  return cm;
}

// 5. Exact UAR values.
Outcome check_uar() {
  const UarReport a = uar(counts(8, 2, 4, 6));
  const UarReport b = uar(counts(25, 0, 0, 40));
  const UarReport c = uar(counts(0, 70, 0, 30));
  const bool ok = a.uar_percent == 70.0 && a.formatted() == "70.00" && b.uar_percent == 100.0 &&
                  b.formatted() == "100.00" && c.uar_percent == 50.0 && c.formatted() == "50.00";
  return {ok, "recalls 0.8/0.6 -> " + a.formatted() + ", perfect -> " + b.formatted() +
                  ", single-class predictor -> " + c.formatted()};
}

int run_pipeline(const PipelineConfig& cfg, std::ostream& log) {
  std::ostringstream sink;
  std::ostream& out = sink;
  if (int rc = cmd_synth(cfg, cfg.corpus_root, out, log)) return rc;
  if (int rc = cmd_extract(cfg, std::nullopt, out, log)) return rc;
  if (int rc = cmd_train(cfg, std::nullopt, out, log)) return rc;
  if (int rc = cmd_score(cfg, std::nullopt, out, log)) return rc;
  if (int rc = cmd_fuse(cfg, out, log)) return rc;
  return cmd_eval(cfg, out, log);
}

PipelineConfig config_in(const fs::path& dir) {
  PipelineConfig cfg;
  cfg.corpus_root = dir / "corpus";
  cfg.manifest = cfg.corpus_root / "manifest.tsv";
  cfg.work_dir = dir / "work";
  return cfg;
}

double dev_uar(const fs::path& scores, const std::map<std::string, Label>& labels) {
  std::vector<Label> truth, pred;
  for (const ScoreRecord& r : read_scores(scores)) {
    truth.push_back(labels.at(r.utt_id));
    pred.push_back(r.predicted);
  }
  return uar(confusion(truth, pred)).uar_percent;
}

// 6. End-to-end on the synthetic corpus.
Outcome check_end_to_end(const fs::path& dir, std::string* table) {
  const auto t0 = Clock::now();
  fs::remove_all(dir);
  PipelineConfig cfg = config_in(dir);
  cfg.synth.n_speakers = 16;  // 8 train, 8 dev
  cfg.synth.utts_per_speaker = 25;
  cfg.synth.seed = 2020;
  cfg.synth.mask.attenuation_db_at_8khz = 6.0;
  cfg.gmm.n_components = 64;
  std::ostringstream log;
  if (run_pipeline(cfg, log) != 0) return {false, "pipeline failed: " + log.str()};
  const double secs = seconds_since(t0);

  std::map<std::string, Label> labels;
  for (const ManifestEntry& e : load_manifest(cfg.manifest).entries) labels.emplace(e.utt_id, *e.label);
  const WorkLayout layout{cfg.work_dir};
  std::string detail;
  bool ok = true;
  double best = 0.0;
  for (FeatureKind k : cfg.systems) {
    const std::string name(feature_kind_name(k));
    const double u = dev_uar(layout.scores_file(name, Partition::kDev), labels);
    best = std::max(best, u);
    ok = ok && u >= 85.0;
    detail += name + " " + format_percent(u) + ", ";
  }
  const double fused = dev_uar(layout.scores_file("fusion", Partition::kDev), labels);
  ok = ok && fused >= best - 0.5 && secs < 600.0;
  detail += "fusion " + format_percent(fused) + fmt(" (dev UAR), %.1f s", secs);
  *table = read_text(layout.report_file());
  return {ok, detail};
}

// 7. Feature shapes on a one-second input.
Outcome check_shapes() {
  Waveform w;
  w.samples = oracle::random_signal(16000, 700, 0.3);
  std::string detail;
  bool ok = true;
  for (FeatureKind k : kAllFeatureKinds) {
    const FeatureMatrix f = FeatureExtractor(k, FeatureConfig{})(w);
    ok = ok && f.values.rows() == 99 && f.values.cols() == 90 && f.values.allFinite();
    detail += std::string(feature_kind_name(k)) + " " + std::to_string(f.values.rows()) + "x" +
              std::to_string(f.values.cols()) + " ";
  }
  return {ok, detail};
}

// Replaces each right-aligned UAR cell with a placeholder so the template
// pins the layout but not the numbers.
std::string table_structure(const std::string& table) {
  static const std::regex percent(R"(^ *\d{1,3}\.\d{2}$)");
  std::istringstream in(table);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.size() == 48 && line[28] == ' ' && line[38] == ' ') {
      for (std::size_t start : {29u, 39u}) {
        if (std::regex_match(line.substr(start, 9), percent)) line.replace(start, 9, "    <uar>");
      }
    }
    out += line + "\n";
  }
  return out;
}

// 8. Report layout against the golden template.
Outcome check_report(const std::string& table, const fs::path& golden) {
  if (table.empty()) return {false, "no report produced"};
  if (!fs::exists(golden)) return {false, "missing template " + golden.string()};
  const std::string got = table_structure(table);
  const std::string want = read_text(golden);
  if (got != want) return {false, "report layout differs from template:\n" + got};
  return {true, "layout matches " + golden.filename().string()};
}

// 9. Two identical runs produce identical scores and tables.
Outcome check_determinism(const fs::path& dir) {
  const auto t0 = Clock::now();
  std::vector<fs::path> runs{dir / "run_a", dir / "run_b"};
  for (const fs::path& r : runs) {
    fs::remove_all(r);
    PipelineConfig cfg = config_in(r);
    cfg.synth.n_speakers = 4;
    cfg.synth.utts_per_speaker = 6;
    cfg.synth.n_test_speakers = 1;
    cfg.synth.blind_test = false;
    cfg.gmm.n_components = 8;
    std::ostringstream log;
    if (run_pipeline(cfg, log) != 0) return {false, "pipeline failed: " + log.str()};
  }
  int compared = 0;
  for (const char* sub : {"scores", "reports"}) {
    for (const auto& e : fs::directory_iterator(runs[0] / "work" / sub)) {
      const fs::path twin = runs[1] / "work" / sub / e.path().filename();
      if (!fs::exists(twin) || read_text(e.path()) != read_text(twin)) {
        return {false, "differs: " + e.path().filename().string()};
      }
      ++compared;
    }
  }
  return {compared > 0, fmt("%.0f score/report files byte-identical across two runs, %.1f s", compared,
                            seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path golden = "tests/golden/uar_table.txt";
  fs::path work = fs::temp_directory_path() / "maskcue_acceptance";
  std::size_t only = 0;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--golden") {
      golden = argv[i + 1];
    } else if (flag == "--work") {
      work = argv[i + 1];
    } else if (flag == "--only") {
      only = std::stoul(argv[i + 1]);
    } else {
      std::fprintf(stderr, "unknown flag %s\n", flag.c_str());
      return 2;
    }
  }
  fs::create_directories(work);

  std::string table;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"instantaneous frequency of single-bin signals within 1e-9", check_inst_freq},
      {"constant-Q transform matches direct summation within 1e-8", check_cqt},
      {"Parseval and DCT round trip within 1e-10", check_dsp_identities},
      {"EM log-likelihood never decreases", check_em_monotone},
      {"UAR exact on hand-built confusion matrices", check_uar},
      {"synthetic end-to-end: systems >= 85, fusion >= best - 0.5", [&] { return check_end_to_end(work / "e2e", &table); }},
      {"every extractor yields 99 x 90 on one second", check_shapes},
      {"UAR report layout matches golden template", [&] { return check_report(table, golden); }},
      {"two pipeline runs are byte-identical", [&] { return check_determinism(work / "determinism"); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && only != i + 1) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  if (!table.empty()) std::printf("\n%s", table.c_str());
  return failures == 0 ? 0 : 1;
}
