#pragma once
// Little-endian binary (de)serialization helpers and content hashing.

#include <cstdint>
#include <string>
#include <vector>

namespace uret::io {

class Writer {
public:
    void u8(std::uint8_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f32(float v);
    void f64(double v);
    void str(const std::string& s);  // u32 length prefix + bytes
    void magic(const std::string& m);  // raw bytes, no prefix
    void f64_array(const double* p, std::size_t n);
    void f32_array(const float* p, std::size_t n);

    const std::vector<std::uint8_t>& bytes() const { return buf_; }
    void save(const std::string& path) const;

private:
    std::vector<std::uint8_t> buf_;
};

// Throws std::runtime_error naming the byte offset on truncation.
class Reader {
public:
    explicit Reader(std::vector<std::uint8_t> bytes) : buf_(std::move(bytes)) {}
    static Reader from_file(const std::string& path);

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    double f64();
    std::string str();
    void f64_array(double* p, std::size_t n);
    void f32_array(float* p, std::size_t n);

    // Reads a fixed magic string; throws on mismatch.
    void expect_magic(const std::string& magic);

    std::size_t offset() const { return pos_; }
    bool at_end() const { return pos_ == buf_.size(); }

private:
    void need(std::size_t n);
    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

// FNV-1a 64-bit, hex-encoded. Used for run-manifest content hashes.
std::string fnv1a64_hex(const std::vector<std::uint8_t>& bytes);
std::string hash_file(const std::string& path);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace uret::io
