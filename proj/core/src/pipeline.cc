#include "maskcue/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "maskcue/binary_io.h"
#include "maskcue/error.h"
#include "maskcue/feature_io.h"
#include "maskcue/fusion.h"
#include "maskcue/gmm.h"
#include "maskcue/metrics.h"
#include "maskcue/viz.h"
#include "maskcue/wav.h"

namespace maskcue {

namespace fs = std::filesystem;

fs::path WorkLayout::features_dir(FeatureKind kind) const {
  return root / "features" / std::string(feature_kind_name(kind));
}
fs::path WorkLayout::feature_file(FeatureKind kind, const std::string& utt_id) const {
  return features_dir(kind) / (utt_id + ".feat");
}
fs::path WorkLayout::feature_key(FeatureKind kind, const std::string& utt_id) const {
  return features_dir(kind) / (utt_id + ".key");
}
fs::path WorkLayout::model_file(FeatureKind kind) const {
  return root / "models" / (std::string(feature_kind_name(kind)) + ".gmm");
}
fs::path WorkLayout::fusion_model_file() const { return root / "models" / "fusion.txt"; }
fs::path WorkLayout::scores_file(const std::string& system, Partition p) const {
  return root / "scores" / (system + "_" + std::string(partition_name(p)) + ".scores");
}
fs::path WorkLayout::predictions_file(const std::string& system, Partition p) const {
  return root / "scores" / (system + "_" + std::string(partition_name(p)) + ".pred");
}
fs::path WorkLayout::report_file() const { return root / "reports" / "uar_table.txt"; }

std::uint64_t content_hash(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int run_guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

namespace {

std::vector<FeatureKind> selected(const PipelineConfig& cfg, std::optional<FeatureKind> kind) {
  if (kind) return {*kind};
  return cfg.systems;
}

std::string system_name(FeatureKind kind) { return std::string(feature_kind_name(kind)); }

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw ValidationError("missing " + what + ": " + p.string());
}

Manifest open_manifest(const PipelineConfig& cfg) {
  require_file(cfg.manifest, "manifest");
  return load_manifest(cfg.manifest);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string model_fingerprint(FeatureKind kind, const PipelineConfig& cfg) {
  return feature_fingerprint(kind, cfg.features) + "|" + gmm_fingerprint(cfg.gmm);
}

template <typename Fn>
void parallel_for(int n, Fn&& fn) {
  const int workers = std::max(1, std::min<int>(n, static_cast<int>(std::thread::hardware_concurrency())));
  std::atomic<int> next{0};
  const auto loop = [&] {
    for (int i = next++; i < n; i = next++) fn(i);
  };
  if (workers == 1) {
    loop();
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(loop);
  for (auto& t : pool) t.join();
}

FeatureMatrix load_feature(const WorkLayout& layout, FeatureKind kind, const std::string& utt_id) {
  const fs::path path = layout.feature_file(kind, utt_id);
  require_file(path, "feature file");
  FeatureMatrix f = read_features(path);
  if (f.kind != kind) throw ValidationError("feature file " + path.string() + " holds a different feature kind");
  return f;
}

std::vector<ScoreRecord> load_scores(const WorkLayout& layout, const std::string& system, Partition p) {
  const fs::path path = layout.scores_file(system, p);
  require_file(path, "score file");
  return read_scores(path);
}

std::map<std::string, Label> label_map(const Manifest& m) {
  std::map<std::string, Label> out;
  for (const ManifestEntry& e : m.entries) {
    if (e.label) out.emplace(e.utt_id, *e.label);
  }
  return out;
}

void write_outputs(const WorkLayout& layout, const std::string& system, Partition p,
                   const std::vector<ScoreRecord>& records) {
  write_scores(layout.scores_file(system, p), records);
  std::vector<std::string> ids;
  std::vector<Label> preds;
  for (const ScoreRecord& r : records) {
    ids.push_back(r.utt_id);
    preds.push_back(r.predicted);
  }
  io::write_file(layout.predictions_file(system, p), format_predictions(ids, preds));
}

}  // namespace

int cmd_synth(const PipelineConfig& cfg, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    const SynthResult r = synth_corpus(cfg.synth, out_dir);
    out << "synthesized " << r.manifest.entries.size() << " segments (" << r.train_speakers.size()
        << " train, " << r.dev_speakers.size() << " dev, " << r.test_speakers.size()
        << " test speakers) into " << out_dir.string() << "\n";
    return kExitOk;
  });
}

int cmd_extract(const PipelineConfig& cfg, std::optional<FeatureKind> kind, std::ostream& out,
                std::ostream& err, ExtractSummary* summary) {
  return run_guarded(err, [&] {
    const Manifest manifest = open_manifest(cfg);
    const WorkLayout layout{cfg.work_dir};
    const int n = static_cast<int>(manifest.entries.size());
    ExtractSummary total;
    int status = kExitOk;
    for (FeatureKind k : selected(cfg, kind)) {
      const FeatureExtractor extract(k, cfg.features);
      const std::string fingerprint = feature_fingerprint(k, cfg.features);
      std::vector<int> outcome(n, 0);  // 0 written, 1 skipped, 2 validation failure, 3 io failure
      std::vector<std::string> message(n);
      parallel_for(n, [&](int i) {
        const ManifestEntry& e = manifest.entries[i];
        try {
          const std::string bytes = io::read_file(manifest.resolve(e));
          const std::string key = hex64(content_hash(bytes)) + "\n" + fingerprint + "\n";
          const fs::path feat_path = layout.feature_file(k, e.utt_id);
          const fs::path key_path = layout.feature_key(k, e.utt_id);
          if (fs::exists(feat_path) && fs::exists(key_path) && io::read_file(key_path) == key) {
            outcome[i] = 1;
            return;
          }
          const Waveform w = decode_wav(bytes, e.utt_id);
          write_features(feat_path, extract(w));
          io::write_file(key_path, key);
        } catch (const IoError& ex) {
          outcome[i] = 3;
          message[i] = ex.what();
        } catch (const std::exception& ex) {
          outcome[i] = 2;
          message[i] = ex.what();
        }
      });
      ExtractSummary s;
      for (int i = 0; i < n; ++i) {
        switch (outcome[i]) {
          case 0: ++s.written; break;
          case 1: ++s.skipped; break;
          default:
            ++s.failed;
            err << "error: " << system_name(k) << " " << manifest.entries[i].utt_id << ": " << message[i] << "\n";
            status = std::max(status, outcome[i] == 2 ? kExitValidation : kExitIo);
        }
      }
      out << system_name(k) << ": " << s.written << " written, " << s.skipped << " up to date, " << s.failed
          << " failed\n";
      total.written += s.written;
      total.skipped += s.skipped;
      total.failed += s.failed;
    }
    if (summary) *summary = total;
    return status;
  });
}

int cmd_train(const PipelineConfig& cfg, std::optional<FeatureKind> kind, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    const Manifest manifest = open_manifest(cfg);
    const WorkLayout layout{cfg.work_dir};
    const std::vector<ManifestEntry> train = manifest.in_partition(Partition::kTrain);
    for (FeatureKind k : selected(cfg, kind)) {
      std::vector<FeatureMatrix> per_class[2];
      Eigen::Index rows[2] = {0, 0};
      int dim = -1;
      for (const ManifestEntry& e : train) {
        FeatureMatrix f = load_feature(layout, k, e.utt_id);
        if (dim < 0) dim = f.dim();
        if (f.dim() != dim) throw ValidationError("feature dimension mismatch in " + e.utt_id);
        const int c = static_cast<int>(*e.label);
        rows[c] += f.n_frames();
        per_class[c].push_back(std::move(f));
      }
      Matrix data[2];
      for (int c = 0; c < 2; ++c) {
        if (rows[c] == 0) {
          throw ValidationError("train partition has no " + std::string(label_name(static_cast<Label>(c))) +
                                " frames");
        }
        data[c].resize(rows[c], dim);
        Eigen::Index at = 0;
        for (const FeatureMatrix& f : per_class[c]) {
          data[c].middleRows(at, f.n_frames()) = f.values;
          at += f.n_frames();
        }
      }
      ClassModels models;
      models.kind = k;
      models.floor_scale = cfg.gmm.floor_scale;
      models.seed = cfg.gmm.seed;
      models.fingerprint = model_fingerprint(k, cfg);
      const GmmTrainResult mask = em_train(data[static_cast<int>(Label::kMask)], cfg.gmm);
      const GmmTrainResult no_mask = em_train(data[static_cast<int>(Label::kNoMask)], cfg.gmm);
      models.mask = mask.model;
      models.no_mask = no_mask.model;
      write_models(layout.model_file(k), models);
      out << system_name(k) << ": trained on " << rows[0] << " no_mask and " << rows[1] << " mask frames ("
          << mask.iterations << "/" << no_mask.iterations << " EM iterations)\n";
    }
    return kExitOk;
  });
}

int cmd_score(const PipelineConfig& cfg, std::optional<FeatureKind> kind, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    const Manifest manifest = open_manifest(cfg);
    const WorkLayout layout{cfg.work_dir};
    for (FeatureKind k : selected(cfg, kind)) {
      const fs::path model_path = layout.model_file(k);
      require_file(model_path, "model");
      const ClassModels models = read_models(model_path);
      if (models.kind != k || models.fingerprint != model_fingerprint(k, cfg)) {
        throw ValidationError("model " + model_path.string() +
                              " was trained with a different configuration; rerun train");
      }
      for (Partition p : {Partition::kDev, Partition::kTest}) {
        const std::vector<ManifestEntry> entries = manifest.in_partition(p);
        if (entries.empty()) continue;
        std::vector<FeatureMatrix> feats(entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i) feats[i] = load_feature(layout, k, entries[i].utt_id);
        std::vector<ScoreRecord> records(entries.size());
        parallel_for(static_cast<int>(entries.size()),
                     [&](int i) { records[i] = classify(models, feats[i], entries[i].utt_id); });
        write_outputs(layout, system_name(k), p, records);
        out << system_name(k) << ": scored " << records.size() << " " << partition_name(p) << " segments\n";
      }
    }
    return kExitOk;
  });
}

int cmd_fuse(const PipelineConfig& cfg, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    const Manifest manifest = open_manifest(cfg);
    const WorkLayout layout{cfg.work_dir};
    const auto labels = label_map(manifest);

    std::vector<std::pair<std::string, std::vector<ScoreRecord>>> dev;
    for (FeatureKind k : cfg.systems) dev.emplace_back(system_name(k), load_scores(layout, system_name(k), Partition::kDev));

    std::vector<std::pair<std::string, std::vector<ScoreRecord>>> test;
    std::vector<std::string> test_missing;
    for (FeatureKind k : cfg.systems) {
      const fs::path p = layout.scores_file(system_name(k), Partition::kTest);
      if (fs::exists(p)) {
        test.emplace_back(system_name(k), read_scores(p));
      } else {
        test_missing.push_back(system_name(k));
      }
    }
    if (!test.empty() && !test_missing.empty()) {
      std::string have, lack;
      for (const auto& [name, r] : test) have += " " + name;
      for (const auto& name : test_missing) lack += " " + name;
      throw ValidationError("dev and test system sets differ: test scores exist for" + have + " but not for" + lack +
                            " (missing " + layout.scores_file(test_missing.front(), Partition::kTest).string() + ")");
    }

    const ScoreTable dev_table = build_score_table(dev, labels);
    const FusionTrainResult trained = train_fusion(dev_table, cfg.fusion);
    write_fusion_model(layout.fusion_model_file(), trained.model);
    write_outputs(layout, "fusion", Partition::kDev, apply_fusion(trained.model, dev_table));
    out << "fusion: trained on " << dev_table.n_utts() << " dev segments over " << dev_table.n_systems()
        << " systems\n";
    if (!test.empty()) {
      const ScoreTable test_table = build_score_table(test, labels);
      write_outputs(layout, "fusion", Partition::kTest, apply_fusion(trained.model, test_table));
      out << "fusion: applied to " << test_table.n_utts() << " test segments\n";
    }
    return kExitOk;
  });
}

namespace {

// UAR of `records` against the manifest, or nothing when any label is unknown.
std::optional<double> uar_of(const std::vector<ScoreRecord>& records, const std::map<std::string, Label>& labels,
                             const std::vector<Label>* predictions = nullptr) {
  if (records.empty()) return std::nullopt;
  std::vector<Label> truth, pred;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto it = labels.find(records[i].utt_id);
    if (it == labels.end()) return std::nullopt;
    truth.push_back(it->second);
    pred.push_back(predictions ? (*predictions)[i] : records[i].predicted);
  }
  const ConfusionMatrix cm = confusion(truth, pred);
  if (cm.true_total(Label::kMask) == 0 || cm.true_total(Label::kNoMask) == 0) return std::nullopt;
  return uar(cm).uar_percent;
}

}  // namespace

int cmd_eval(const PipelineConfig& cfg, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    const Manifest manifest = open_manifest(cfg);
    const WorkLayout layout{cfg.work_dir};
    const auto labels = label_map(manifest);
    const bool has_test = !manifest.in_partition(Partition::kTest).empty();

    ResultSection single{"", {}};
    ResultSection vote{"Majority voting fusion", {}};
    ResultSection fused{"Score level fusion", {}};
    ResultRow vote_row{"Acoustic features", std::nullopt, std::nullopt};
    ResultRow fused_row{"Acoustic features", std::nullopt, std::nullopt};

    for (Partition p : {Partition::kDev, Partition::kTest}) {
      if (p == Partition::kTest && !has_test) continue;
      std::vector<std::vector<ScoreRecord>> per_system;
      for (FeatureKind k : cfg.systems) per_system.push_back(load_scores(layout, system_name(k), p));
      const std::vector<ScoreRecord>& ref = per_system.front();
      for (std::size_t s = 0; s < per_system.size(); ++s) {
        if (per_system[s].size() != ref.size()) {
          throw ValidationError("score files disagree on the " + std::string(partition_name(p)) + " utterance count");
        }
        for (std::size_t i = 0; i < ref.size(); ++i) {
          if (per_system[s][i].utt_id != ref[i].utt_id) {
            throw ValidationError("score files disagree on utterance order at " + ref[i].utt_id);
          }
        }
        if (p == Partition::kDev) single.rows.push_back({system_name(cfg.systems[s]), std::nullopt, std::nullopt});
        ResultRow& row = single.rows[s];
        (p == Partition::kDev ? row.dev_uar : row.test_uar) = uar_of(per_system[s], labels);
      }
      std::vector<std::vector<Label>> preds(per_system.size());
      for (std::size_t s = 0; s < per_system.size(); ++s) {
        for (const ScoreRecord& r : per_system[s]) preds[s].push_back(r.predicted);
      }
      const std::vector<Label> voted = majority_vote(preds);
      (p == Partition::kDev ? vote_row.dev_uar : vote_row.test_uar) = uar_of(ref, labels, &voted);
      (p == Partition::kDev ? fused_row.dev_uar : fused_row.test_uar) =
          uar_of(load_scores(layout, "fusion", p), labels);
    }
    vote.rows.push_back(vote_row);
    fused.rows.push_back(fused_row);
    const std::string table = format_results_table({single, vote, fused});
    io::write_file(layout.report_file(), table);
    out << table;
    return kExitOk;
  });
}

RenderKind parse_render_kind(std::string_view name) {
  if (name == "spectrogram") return RenderKind::kSpectrogram;
  if (name == "pyknogram") return RenderKind::kPyknogram;
  throw ValidationError("unknown render kind '" + std::string(name) + "' (expected spectrogram or pyknogram)");
}

int cmd_render(const PipelineConfig& cfg, const fs::path& input_wav, RenderKind kind, const fs::path& out_path,
               std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    require_file(input_wav, "input");
    const Waveform w = load_wav(input_wav);
    if (kind == RenderKind::kSpectrogram) {
      render(compute_spectrogram(w, cfg.spectrogram), out_path, cfg.render);
    } else {
      render(compute_pyknogram(w, cfg.pyknogram), out_path, cfg.render);
    }
    out << "wrote " << out_path.string() << " and " << out_path.string() << ".txt\n";
    return kExitOk;
  });
}

}  // namespace maskcue
