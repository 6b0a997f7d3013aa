#pragma once

// Minimal native-endian record writer/reader for the library's binary artifacts.

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "ltvwm/errors.hpp"

namespace ltvwm::detail {

class BinaryWriter {
 public:
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void magic(std::string_view m) { bytes(m.data(), m.size()); }
  void i64(std::int64_t v) { bytes(&v, sizeof v); }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void f64(double v) { bytes(&v, sizeof v); }
  void matrix(const Eigen::MatrixXd& m) {
    i64(m.rows());
    i64(m.cols());
    bytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class BinaryReader {
 public:
  BinaryReader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

  void bytes(void* p, std::size_t n) {
    if (pos_ + n > data_.size()) throw FormatError(what_ + ": truncated file");
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  void expect_magic(std::string_view m) {
    if (data_.substr(0, m.size()) != m) throw FormatError(what_ + ": bad magic, expected " + std::string(m));
    pos_ = m.size();
  }
  std::int64_t i64() { std::int64_t v; bytes(&v, sizeof v); return v; }
  std::uint64_t u64() { std::uint64_t v; bytes(&v, sizeof v); return v; }
  double f64() { double v; bytes(&v, sizeof v); return v; }
  Eigen::MatrixXd matrix() {
    const auto rows = i64();
    const auto cols = i64();
    if (rows < 0 || cols < 0 || rows * cols > static_cast<std::int64_t>(remaining() / sizeof(double))) {
      throw FormatError(what_ + ": corrupt matrix header");
    }
    Eigen::MatrixXd m(rows, cols);
    bytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    return m;
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  void expect_end() const {
    if (pos_ != data_.size()) throw FormatError(what_ + ": trailing bytes");
  }

 private:
  std::string_view data_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace ltvwm::detail
