#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "maskcue/corpus.h"
#include "maskcue/error.h"
#include "maskcue/wav.h"
#include "oracles.h"

namespace maskcue {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("maskcue_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

TEST(Manifest, ParsesValidLines) {
  const Manifest m = parse_manifest(
      "a\twav/a.wav\ttrain\tmask\n"
      "b\twav/b.wav\tdev\tno_mask\n"
      "c\twav/c.wav\ttest\t?\n",
      "/data");
  ASSERT_EQ(m.entries.size(), 3u);
  EXPECT_EQ(m.entries[0].label, Label::kMask);
  EXPECT_EQ(m.entries[1].partition, Partition::kDev);
  EXPECT_FALSE(m.entries[2].label.has_value());
  EXPECT_EQ(m.resolve(m.entries[0]), fs::path("/data/wav/a.wav"));
  EXPECT_EQ(m.in_partition(Partition::kTest).size(), 1u);
}

TEST(Manifest, DuplicateIdErrorNamesTheId) {
  try {
    parse_manifest("dup_id_7\ta.wav\ttrain\tmask\ndup_id_7\tb.wav\ttrain\tno_mask\n", ".");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("dup_id_7"), std::string::npos);
  }
}

TEST(Manifest, RejectsBadEntries) {
  EXPECT_THROW(parse_manifest("a\ta.wav\ttrain\t?\n", "."), ValidationError);
  EXPECT_THROW(parse_manifest("a\ta.wav\tdev\t?\n", "."), ValidationError);
  EXPECT_THROW(parse_manifest("a\ta.wav\tholdout\tmask\n", "."), ValidationError);
  EXPECT_THROW(parse_manifest("a\ta.wav\ttrain\n", "."), ValidationError);
  EXPECT_THROW(parse_manifest("a\ta.wav\ttrain\tmasked\n", "."), ValidationError);
}

TEST(Manifest, SaveLoadRoundTrip) {
  const fs::path dir = scratch_dir("manifest_rt");
  Manifest m = parse_manifest("x\twav/x.wav\ttrain\tno_mask\ny\twav/y.wav\ttest\t?\n", dir);
  save_manifest(dir / "m.tsv", m);
  const Manifest back = load_manifest(dir / "m.tsv");
  EXPECT_EQ(format_manifest(back), format_manifest(m));
  EXPECT_EQ(back.root, dir);
  fs::remove_all(dir);
}

Waveform ramp(std::size_t n) {
  Waveform w;
  for (std::size_t i = 0; i < n; ++i) w.samples.push_back(static_cast<double>(i) / n - 0.5);
  return w;
}

TEST(Segment, CountsAndRemainderPolicy) {
  EXPECT_EQ(segment_1s(ramp(160000)).size(), 10u);
  EXPECT_EQ(segment_1s(ramp(40000)).size(), 2u);
  EXPECT_EQ(segment_1s(ramp(8000)).size(), 0u);
}

TEST(Segment, ConcatenationReproducesPrefix) {
  const Waveform w = ramp(16000 * 3 + 1234);
  std::vector<double> joined;
  for (const Waveform& s : segment_1s(w)) {
    EXPECT_EQ(s.size(), 16000u);
    joined.insert(joined.end(), s.samples.begin(), s.samples.end());
  }
  ASSERT_EQ(joined.size(), 48000u);
  EXPECT_TRUE(std::equal(joined.begin(), joined.end(), w.samples.begin()));
}

TEST(Wav, RoundTripAtSixteenBits) {
  const fs::path dir = scratch_dir("wav_rt");
  Waveform w;
  for (int i = 0; i < 16000; ++i) w.samples.push_back(std::round(0.5 * std::sin(0.01 * i) * 32768.0) / 32768.0);
  save_wav(dir / "a.wav", w);
  const Waveform back = load_wav(dir / "a.wav");
  EXPECT_EQ(back.sample_rate_hz, 16000);
  ASSERT_EQ(back.size(), 16000u);
  EXPECT_EQ(back.samples, w.samples);
  fs::remove_all(dir);
}

void expect_error_mentions(const std::string& bytes, const std::string& word) {
  try {
    decode_wav(bytes, "probe.wav");
    FAIL() << "expected rejection mentioning " << word;
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find(word), std::string::npos) << e.what();
  }
}

TEST(Wav, RejectsWrongFormats) {
  const std::vector<double> samples(3200, 0.1);
  expect_error_mentions(encode_pcm16_wav(samples, 2, 16000), "channel");
  expect_error_mentions(encode_pcm16_wav(samples, 1, 44100), "sample rate");

  std::string eight_bit = encode_pcm16_wav(samples, 1, 16000);
  // bits-per-sample field of the canonical 44-byte header
  eight_bit[34] = 8;
  expect_error_mentions(eight_bit, "bit");

  std::string truncated = encode_pcm16_wav(samples, 1, 16000).substr(0, 20);
  EXPECT_THROW(decode_wav(truncated), ValidationError);
  EXPECT_THROW(decode_wav("not a wav file at all, just text padding........"), ValidationError);
}

TEST(Wav, MissingFileIsIoError) {
  EXPECT_THROW(load_wav("/nonexistent/dir/x.wav"), IoError);
}

double band_energy(const std::vector<Complex>& spec, double lo, double hi, int fs) {
  const std::size_t n = spec.size();
  double e = 0.0;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const double f = static_cast<double>(k) * fs / n;
    if (f >= lo && f < hi) e += std::norm(spec[k]);
  }
  return e;
}

TEST(MaskFilter, GainShape) {
  MaskFilterSpec spec;
  EXPECT_EQ(mask_gain_db(500.0, spec), 0.0);
  EXPECT_EQ(mask_gain_db(1000.0, spec), 0.0);
  EXPECT_NEAR(mask_gain_db(8000.0, spec), -6.0, 1e-12);
  EXPECT_NEAR(mask_gain_db(std::sqrt(8.0) * 1000.0, spec), -3.0, 1e-12);
  double prev = 0.0;
  for (double f = 1000.0; f <= 8000.0; f += 250.0) {
    const double g = mask_gain_db(f, spec);
    EXPECT_LE(g, prev);
    prev = g;
  }
}

TEST(MaskFilter, ValidationNamesField) {
  MaskFilterSpec spec;
  spec.attenuation_db_at_8khz = -1.0;
  try {
    validate(spec);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("attenuation_db_at_8khz"), std::string::npos);
  }
}

class SynthCorpus : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(scratch_dir("synth_corpus"));
    SynthConfig cfg;
    cfg.n_speakers = 4;
    cfg.utts_per_speaker = 10;
    result_ = new SynthResult(synth_corpus(cfg, *dir_));
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete result_;
    delete dir_;
  }
  static fs::path* dir_;
  static SynthResult* result_;
};

fs::path* SynthCorpus::dir_ = nullptr;
SynthResult* SynthCorpus::result_ = nullptr;

TEST_F(SynthCorpus, EightyLabeledSegments) {
  const Manifest& m = result_->manifest;
  EXPECT_EQ(m.entries.size(), 80u);
  for (const auto& e : m.entries) {
    EXPECT_TRUE(e.label.has_value());
    EXPECT_TRUE(fs::exists(*dir_ / e.path));
  }
  EXPECT_TRUE(fs::exists(*dir_ / "manifest.tsv"));
  EXPECT_TRUE(fs::exists(*dir_ / "synth_meta.txt"));
  EXPECT_EQ(format_manifest(load_manifest(*dir_ / "manifest.tsv")), format_manifest(m));
}

TEST_F(SynthCorpus, BalancedAndSpeakerDisjoint) {
  std::map<Partition, std::array<int, 2>> counts;
  std::map<Partition, std::set<std::string>> speakers;
  for (const auto& e : result_->manifest.entries) {
    ++counts[e.partition][static_cast<int>(*e.label)];
    speakers[e.partition].insert(e.utt_id.substr(0, e.utt_id.find('_')));
  }
  EXPECT_EQ(counts[Partition::kTrain][0], counts[Partition::kTrain][1]);
  EXPECT_EQ(counts[Partition::kDev][0], counts[Partition::kDev][1]);
  EXPECT_EQ(counts[Partition::kTrain][0], 20);
  for (const auto& s : speakers[Partition::kTrain]) EXPECT_EQ(speakers[Partition::kDev].count(s), 0u) << s;
  EXPECT_EQ(result_->train_speakers.size(), 2u);
  EXPECT_EQ(result_->dev_speakers.size(), 2u);
}

TEST_F(SynthCorpus, MaskedIsWeakerAndDarkerPerUtterance) {
  std::map<std::string, std::array<fs::path, 2>> pairs;
  for (const auto& e : result_->manifest.entries) {
    const std::string stem = e.utt_id.substr(0, e.utt_id.rfind(e.label == Label::kMask ? "_mask" : "_no_mask"));
    pairs[stem][static_cast<int>(*e.label)] = *dir_ / e.path;
  }
  ASSERT_EQ(pairs.size(), 40u);
  for (const auto& [stem, paths] : pairs) {
    const Waveform clean = load_wav(paths[0]);
    const Waveform masked = load_wav(paths[1]);
    double e_clean = 0.0, e_masked = 0.0;
    for (double s : clean.samples) e_clean += s * s;
    for (double s : masked.samples) e_masked += s * s;
    EXPECT_LT(e_masked, e_clean) << stem;

    const auto sc = dft(std::span<const double>(clean.samples));
    const auto sm = dft(std::span<const double>(masked.samples));
    const double ratio_clean = band_energy(sc, 4000, 8001, 16000) / band_energy(sc, 0, 2000, 16000);
    const double ratio_masked = band_energy(sm, 4000, 8001, 16000) / band_energy(sm, 0, 2000, 16000);
    EXPECT_LT(ratio_masked, ratio_clean) << stem;
  }
}

TEST_F(SynthCorpus, SameSeedIsBitIdentical) {
  const fs::path other = scratch_dir("synth_corpus_again");
  SynthConfig cfg;
  cfg.n_speakers = 4;
  cfg.utts_per_speaker = 10;
  synth_corpus(cfg, other);
  EXPECT_EQ(read_bytes(other / "manifest.tsv"), read_bytes(*dir_ / "manifest.tsv"));
  for (const auto& e : result_->manifest.entries) {
    ASSERT_EQ(read_bytes(other / e.path), read_bytes(*dir_ / e.path)) << e.utt_id;
  }
  fs::remove_all(other);
}

TEST(SynthConfigValidation, RejectsBadCounts) {
  SynthConfig cfg;
  cfg.n_speakers = 0;
  EXPECT_THROW(validate(cfg), ValidationError);
  cfg.n_speakers = 2;
  cfg.utts_per_speaker = 0;
  EXPECT_THROW(validate(cfg), ValidationError);
}

TEST(SynthCorpusTestPartition, BlindedLabels) {
  const fs::path dir = scratch_dir("synth_blind");
  SynthConfig cfg;
  cfg.n_speakers = 2;
  cfg.utts_per_speaker = 2;
  cfg.n_test_speakers = 1;
  const SynthResult r = synth_corpus(cfg, dir);
  const auto test = r.manifest.in_partition(Partition::kTest);
  EXPECT_EQ(test.size(), 4u);
  for (const auto& e : test) EXPECT_FALSE(e.label.has_value());
  fs::remove_all(dir);
}

}  // namespace
}  // namespace maskcue
