#include "maskcue/feature_io.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "maskcue/binary_io.h"
#include "maskcue/error.h"

namespace maskcue {

namespace io {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace io

namespace {
constexpr std::string_view kMagic = "MCFEAT01";
}

std::string encode_features(const FeatureMatrix& f) {
  std::string out;
  out.reserve(32 + sizeof(double) * f.values.size());
  out.append(kMagic);
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(f.kind));
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(f.n_frames()));
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(f.dim()));
  io::put<std::uint32_t>(out, 0);
  io::put<double>(out, f.hop_ms);
  for (Eigen::Index r = 0; r < f.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < f.values.cols(); ++c) io::put<double>(out, f.values(r, c));
  }
  return out;
}

FeatureMatrix decode_features(const std::string& bytes) {
  io::Reader in(bytes, "feature file");
  if (in.take(kMagic.size()) != kMagic) throw ValidationError("feature file: bad magic");
  const auto kind = in.get<std::uint32_t>();
  if (kind > 3) throw ValidationError("feature file: unknown kind " + std::to_string(kind));
  const auto rows = in.get<std::uint32_t>();
  const auto cols = in.get<std::uint32_t>();
  in.get<std::uint32_t>();
  FeatureMatrix f;
  f.kind = static_cast<FeatureKind>(kind);
  f.hop_ms = in.get<double>();
  f.values.resize(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) f.values(r, c) = in.get<double>();
  }
  if (!in.done()) throw ValidationError("feature file: trailing bytes");
  return f;
}

void write_features(const std::filesystem::path& path, const FeatureMatrix& f) {
  io::write_file(path, encode_features(f));
}

FeatureMatrix read_features(const std::filesystem::path& path) {
  return decode_features(io::read_file(path));
}

void write_features_text(const std::filesystem::path& path, const FeatureMatrix& f) {
  std::string out;
  char buf[32];
  for (Eigen::Index r = 0; r < f.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < f.values.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", f.values(r, c));
      if (c > 0) out.push_back(' ');
      out.append(buf);
    }
    out.push_back('\n');
  }
  io::write_file(path, out);
}

}  // namespace maskcue
