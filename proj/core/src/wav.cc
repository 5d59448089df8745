#include "maskcue/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "maskcue/binary_io.h"
#include "maskcue/error.h"

namespace maskcue {

Waveform decode_wav(std::string_view bytes, std::string_view name) {
  const std::string who(name);
  io::Reader in(bytes, who);
  if (bytes.size() < 12 || in.take(4) != "RIFF") throw ValidationError(who + ": not a RIFF file");
  in.get<std::uint32_t>();
  if (in.take(4) != "WAVE") throw ValidationError(who + ": not a WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::string_view data;
  bool have_data = false;
  while (!in.done() && !have_data) {
    const std::string_view id = in.take(4);
    const auto size = in.get<std::uint32_t>();
    const std::string_view body = in.take(size);
    if (size % 2 == 1 && !in.done()) in.take(1);
    if (id == "fmt ") {
      if (size < 16) throw ValidationError(who + ": fmt chunk too short");
      io::Reader fmt(body, who);
      format = fmt.get<std::uint16_t>();
      channels = fmt.get<std::uint16_t>();
      rate = fmt.get<std::uint32_t>();
      fmt.get<std::uint32_t>();
      fmt.get<std::uint16_t>();
      bits = fmt.get<std::uint16_t>();
      if (format == 0xFFFE && size >= 40) {
        fmt.get<std::uint16_t>();
        fmt.get<std::uint16_t>();
        fmt.get<std::uint32_t>();
        format = fmt.get<std::uint16_t>();  // sub-format GUID starts with the tag
      }
      have_fmt = true;
    } else if (id == "data") {
      data = body;
      have_data = true;
    }
  }
  if (!have_fmt) throw ValidationError(who + ": missing fmt chunk");
  if (!have_data) throw ValidationError(who + ": missing data chunk");
  if (format != 1) {
    throw ValidationError(who + ": audio format " + std::to_string(format) + " is not PCM");
  }
  if (channels != 1) {
    throw ValidationError(who + ": channel count " + std::to_string(channels) + " (expected mono)");
  }
  if (rate != kCorpusSampleRateHz) {
    throw ValidationError(who + ": sample rate " + std::to_string(rate) + " Hz (expected 16000 Hz)");
  }
  if (bits != 16) {
    throw ValidationError(who + ": bit depth " + std::to_string(bits) + " (expected 16)");
  }
  if (data.size() % 2 != 0) throw ValidationError(who + ": data chunk has a partial sample");
  Waveform w;
  w.sample_rate_hz = static_cast<int>(rate);
  w.samples.resize(data.size() / 2);
  io::Reader pcm(data, who);
  for (double& s : w.samples) s = pcm.get<std::int16_t>() / 32768.0;
  if (w.samples.empty()) throw ValidationError(who + ": no samples");
  return w;
}

Waveform load_wav(const std::filesystem::path& path) {
  return decode_wav(io::read_file(path), path.string());
}

std::string encode_pcm16_wav(std::span<const double> interleaved, int channels,
                             int sample_rate_hz) {
  if (channels < 1 || sample_rate_hz <= 0) throw ValidationError("bad WAV layout");
  const auto data_bytes = static_cast<std::uint32_t>(interleaved.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out.append("RIFF");
  io::put<std::uint32_t>(out, 36 + data_bytes);
  out.append("WAVE");
  out.append("fmt ");
  io::put<std::uint32_t>(out, 16);
  io::put<std::uint16_t>(out, 1);
  io::put<std::uint16_t>(out, static_cast<std::uint16_t>(channels));
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate_hz));
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate_hz * channels * 2));
  io::put<std::uint16_t>(out, static_cast<std::uint16_t>(channels * 2));
  io::put<std::uint16_t>(out, 16);
  out.append("data");
  io::put<std::uint32_t>(out, data_bytes);
  for (double s : interleaved) {
    const double q = std::clamp(std::nearbyint(s * 32768.0), -32768.0, 32767.0);
    io::put<std::int16_t>(out, static_cast<std::int16_t>(q));
  }
  return out;
}

void save_wav(const std::filesystem::path& path, const Waveform& w) {
  io::write_file(path, encode_pcm16_wav(w.samples, 1, w.sample_rate_hz));
}

}  // namespace maskcue
