// Little-endian helpers and whole-file I/O shared by the binary containers.

#ifndef MASKCUE_BINARY_IO_H_
#define MASKCUE_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>

#include "maskcue/error.h"

namespace maskcue::io {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  Reader(std::string_view bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw ValidationError(what_ + ": truncated data");
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string_view take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw ValidationError(what_ + ": truncated data");
    const std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }
  const std::string& what() const { return what_; }

 private:
  std::string_view bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

/// Throws IoError when the file cannot be read.
std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename; throws IoError on failure.
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace maskcue::io

#endif  // MASKCUE_BINARY_IO_H_
