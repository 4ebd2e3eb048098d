#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hyperfusion/types.hpp"

namespace hyperfusion::io {

// Little-endian byte packing. Floats are stored bit-exactly via their IEEE
// representation so round-trips reproduce values to the last bit.
class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put_le(v); }
  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void i64(std::int64_t v) { put_le(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }

  void bytes(const void* data, std::size_t n) {
    const char* p = static_cast<const char*>(data);
    buf_.append(p, n);
  }

  // u32 length prefix + raw UTF-8 bytes.
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

  void string_list(const std::vector<std::string>& v) {
    u64(v.size());
    for (const auto& s : v) str(s);
  }

  // u64 rows, u64 cols, then row-major f64 entries.
  void matrix(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }

  void vector(const Vector& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
  }

  const std::string& buffer() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  template <typename T>
  void put_le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
      buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }

  std::string buf_;
};

// Reader over an in-memory buffer. Throws DataError with the current byte
// offset on truncation.
class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint16_t u16() { return get_le<std::uint16_t>(); }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  std::int64_t i64() { return std::bit_cast<std::int64_t>(get_le<std::uint64_t>()); }
  float f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }

  std::string str() {
    const std::uint32_t n = u32();
    const char* p = take(n);
    return std::string(p, n);
  }

  std::vector<std::string> string_list() {
    const std::uint64_t n = u64();
    std::vector<std::string> out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(str());
    return out;
  }

  Matrix matrix() {
    const std::uint64_t rows = u64();
    const std::uint64_t cols = u64();
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::uint64_t r = 0; r < rows; ++r)
      for (std::uint64_t c = 0; c < cols; ++c)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = f64();
    return m;
  }

  Vector vector() {
    const std::uint64_t n = u64();
    Vector v(static_cast<Eigen::Index>(n));
    for (std::uint64_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = f64();
    return v;
  }

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }

  const char* take(std::size_t n);

 private:
  template <typename T>
  T get_le() {
    const char* p = take(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
  }

  std::string data_;
  std::size_t pos_ = 0;
};

// A versioned artifact file: 4-byte magic, u32 format version, then
// length-prefixed named sections.
struct Section {
  std::string name;
  std::string payload;
};

void write_sections_file(const std::filesystem::path& path,
                         const std::string& magic, std::uint32_t version,
                         const std::vector<Section>& sections);

// Throws DataError on magic mismatch; if expected_version is nonzero and the
// file's version differs, the error message carries both versions.
std::vector<Section> read_sections_file(const std::filesystem::path& path,
                                        const std::string& magic,
                                        std::uint32_t expected_version);

const Section* find_section(const std::vector<Section>& sections,
                            const std::string& name);

// Write-to-temp-then-rename so partially written artifacts are never seen.
void atomic_write_file(const std::filesystem::path& path,
                       const std::string& contents);

std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace hyperfusion::io
