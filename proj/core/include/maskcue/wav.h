// RIFF/WAVE PCM I/O. Loading is strict: 16-bit PCM, mono, 16 kHz.

#ifndef MASKCUE_WAV_H_
#define MASKCUE_WAV_H_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "maskcue/signal.h"

namespace maskcue {

inline constexpr int kCorpusSampleRateHz = 16000;

/// Throws ValidationError naming the offending property (format, channel
/// count, sample rate, bit depth) or describing the corruption.
Waveform decode_wav(std::string_view bytes, std::string_view name = "wav");
Waveform load_wav(const std::filesystem::path& path);

/// 16-bit PCM with `channels` interleaved channels; samples are clipped to
/// [-1, 1) and rounded to the nearest step of 1/32768.
std::string encode_pcm16_wav(std::span<const double> interleaved, int channels,
                             int sample_rate_hz);
void save_wav(const std::filesystem::path& path, const Waveform& w);

}  // namespace maskcue

#endif  // MASKCUE_WAV_H_
