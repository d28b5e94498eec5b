#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

// Little-endian binary checkpoint plumbing shared by the model and policy
// codecs.

namespace lumenfix::detail {

inline void append_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void append_u64(std::string& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void append_i32(std::string& buf, int32_t v) { append_u32(buf, static_cast<uint32_t>(v)); }
inline void append_i64(std::string& buf, int64_t v) { append_u64(buf, static_cast<uint64_t>(v)); }

inline void append_f64(std::string& buf, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  append_u64(buf, bits);
}

class Reader {
 public:
  Reader(std::string data, std::string name) : data_(std::move(data)), name_(std::move(name)) {}

  void expect_magic(const std::string& magic) {
    if (data_.size() < magic.size() || data_.compare(0, magic.size(), magic) != 0)
      throw std::runtime_error(name_ + ": checkpoint magic mismatch (expected " + magic + ")");
    pos_ = magic.size();
  }

  uint8_t read_u8() {
    need(1);
    return byte();
  }

  uint32_t read_u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(byte()) << (8 * i);
    return v;
  }

  uint64_t read_u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(byte()) << (8 * i);
    return v;
  }

  int32_t read_i32() { return static_cast<int32_t>(read_u32()); }
  int64_t read_i64() { return static_cast<int64_t>(read_u64()); }

  double read_f64() {
    const uint64_t bits = read_u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  size_t pos() const { return pos_; }

 private:
  void need(size_t n) const {
    if (data_.size() - pos_ < n)
      throw std::runtime_error(name_ + ": truncated checkpoint at byte " + std::to_string(pos_));
  }
  uint8_t byte() { return static_cast<uint8_t>(data_[pos_++]); }

  std::string data_;
  std::string name_;
  size_t pos_ = 0;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void spit(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open file for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace lumenfix::detail
