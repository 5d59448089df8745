// maskcue command-line front end.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "maskcue/config.h"
#include "maskcue/pipeline.h"

namespace fs = std::filesystem;
using namespace maskcue;

namespace {

struct Flags {
  std::string config;
  std::string manifest;
  std::string feature;
  std::string out;
  std::string input;
  std::string kind = "spectrogram";
  std::optional<std::uint64_t> seed;
};

PipelineConfig resolve(const Flags& f, bool out_is_work_dir) {
  PipelineConfig cfg = f.config.empty() ? PipelineConfig{} : load_config(f.config);
  if (!f.manifest.empty()) cfg.manifest = f.manifest;
  if (f.seed) {
    cfg.synth.seed = *f.seed;
    cfg.gmm.seed = *f.seed;
  }
  if (out_is_work_dir && !f.out.empty()) cfg.work_dir = f.out;
  validate(cfg);
  return cfg;
}

std::optional<FeatureKind> feature_flag(const Flags& f) {
  if (f.feature.empty() || f.feature == "all") return std::nullopt;
  return parse_feature_kind(f.feature);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speech face-mask detection from acoustic features"};
  app.require_subcommand(1);
  Flags flags;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "Pipeline config file")->check(CLI::ExistingFile);
    sub->add_option("--manifest", flags.manifest, "Manifest (overrides [paths] manifest)");
    sub->add_option("--seed", flags.seed, "Seed for corpus synthesis and GMM initialisation");
  };

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic labelled corpus");
  common(synth);
  synth->add_option("--out", flags.out, "Corpus directory (default [paths] corpus_root)");

  CLI::App* extract = app.add_subcommand("extract", "Extract features for every manifest entry");
  CLI::App* train = app.add_subcommand("train", "Train mask / no_mask GMMs on the train partition");
  CLI::App* score = app.add_subcommand("score", "Score dev and test partitions");
  for (CLI::App* sub : {extract, train, score}) {
    common(sub);
    sub->add_option("--feature", flags.feature, "lfcc, mfcc, ifcc, cqcc or all (default all)");
    sub->add_option("--out", flags.out, "Work directory (default [paths] work_dir)");
  }
  CLI::App* fuse = app.add_subcommand("fuse", "Fit score fusion on dev and apply it to test");
  CLI::App* eval = app.add_subcommand("eval", "Print the UAR table");
  for (CLI::App* sub : {fuse, eval}) {
    common(sub);
    sub->add_option("--out", flags.out, "Work directory (default [paths] work_dir)");
  }

  CLI::App* render = app.add_subcommand("render", "Render a spectrogram or pyknogram of a WAV file");
  common(render);
  render->add_option("--input", flags.input, "Input WAV")->required();
  render->add_option("--kind", flags.kind, "spectrogram or pyknogram");
  render->add_option("--out", flags.out, "Output image path (.ppm)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  std::ostream& out = std::cout;
  std::ostream& err = std::cerr;
  PipelineConfig cfg;
  std::optional<FeatureKind> kind;
  const int loaded = run_guarded(err, [&] {
    cfg = resolve(flags, !synth->parsed() && !render->parsed());
    if (extract->parsed() || train->parsed() || score->parsed()) kind = feature_flag(flags);
    return kExitOk;
  });
  if (loaded != kExitOk) return loaded;

  if (synth->parsed()) return cmd_synth(cfg, flags.out.empty() ? cfg.corpus_root : fs::path(flags.out), out, err);
  if (extract->parsed()) return cmd_extract(cfg, kind, out, err);
  if (train->parsed()) return cmd_train(cfg, kind, out, err);
  if (score->parsed()) return cmd_score(cfg, kind, out, err);
  if (fuse->parsed()) return cmd_fuse(cfg, out, err);
  if (eval->parsed()) return cmd_eval(cfg, out, err);
  return run_guarded(err, [&] {
    return cmd_render(cfg, flags.input, parse_render_kind(flags.kind), flags.out, out, err);
  });
}
