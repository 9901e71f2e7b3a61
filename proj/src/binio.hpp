#pragma once

// Little-endian binary helpers shared by the artifact readers and writers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "nextline/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "artifact formats are little-endian; big-endian hosts need byte swapping");

namespace nextline::binio {

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  }

  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  template <class T>
  void pod(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    bytes(&v, sizeof(T));
  }
  template <class T>
  void array(const std::vector<T>& v) {
    bytes(v.data(), v.size() * sizeof(T));
  }
  void finish() {
    out_.flush();
    if (!out_) fail(ErrorKind::Io, "write failed for " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

/// Reads a whole file and walks it with bounds checks; running off the end
/// is a Format error naming the file.
class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    data_.resize(size);
    if (size && !in.read(data_.data(), static_cast<std::streamsize>(size))) {
      fail(ErrorKind::Io, "read failed for " + path.string());
    }
  }

  void bytes(void* dst, std::size_t n) {
    if (n > data_.size() - pos_) fail(ErrorKind::Format, path_.string() + ": truncated file");
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }
  template <class T>
  T pod() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  template <class T>
  std::vector<T> array(std::size_t count) {
    if (count > (data_.size() - pos_) / sizeof(T)) fail(ErrorKind::Format, path_.string() + ": truncated file");
    std::vector<T> v(count);
    bytes(v.data(), count * sizeof(T));
    return v;
  }
  void expect_magic(const char (&magic)[5], const char* what) {
    char got[4];
    bytes(got, 4);
    if (std::memcmp(got, magic, 4) != 0) fail(ErrorKind::Format, path_.string() + ": not a " + what + " file (bad magic)");
  }
  void expect_version(std::uint32_t expected, const char* what) {
    const auto got = pod<std::uint32_t>();
    if (got != expected) {
      fail(ErrorKind::Format, path_.string() + ": " + what + " format version " + std::to_string(got) +
                                  " is not supported (expected version " + std::to_string(expected) + ")");
    }
  }
  void expect_end() {
    if (pos_ != data_.size()) fail(ErrorKind::Format, path_.string() + ": trailing bytes after payload");
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::vector<char> data_;
  std::size_t pos_ = 0;
};

}  // namespace nextline::binio
