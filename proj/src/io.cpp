#include "uret/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "on-disk formats assume a little-endian host");

namespace uret::io {

void Writer::u8(std::uint8_t v) { buf_.push_back(v); }

void Writer::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Writer::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Writer::f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
}

void Writer::f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
}

void Writer::str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
}

void Writer::magic(const std::string& m) { buf_.insert(buf_.end(), m.begin(), m.end()); }

void Writer::f64_array(const double* p, std::size_t n) {
    std::size_t off = buf_.size();
    buf_.resize(off + n * 8);
    std::memcpy(buf_.data() + off, p, n * 8);
}

void Writer::f32_array(const float* p, std::size_t n) {
    std::size_t off = buf_.size();
    buf_.resize(off + n * 4);
    std::memcpy(buf_.data() + off, p, n * 4);
}

void Writer::save(const std::string& path) const { write_file(path, buf_); }

Reader Reader::from_file(const std::string& path) { return Reader(read_file(path)); }

void Reader::need(std::size_t n) {
    if (pos_ + n > buf_.size()) {
        throw std::runtime_error("truncated file at byte offset " +
                                 std::to_string(pos_) + " (need " +
                                 std::to_string(n) + " more bytes)");
    }
}

std::uint8_t Reader::u8() {
    need(1);
    return buf_[pos_++];
}

std::uint32_t Reader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_++]) << (8 * i);
    return v;
}

std::uint64_t Reader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_++]) << (8 * i);
    return v;
}

float Reader::f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

double Reader::f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

std::string Reader::str() {
    std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
}

void Reader::f64_array(double* p, std::size_t n) {
    need(n * 8);
    std::memcpy(p, buf_.data() + pos_, n * 8);
    pos_ += n * 8;
}

void Reader::f32_array(float* p, std::size_t n) {
    need(n * 4);
    std::memcpy(p, buf_.data() + pos_, n * 4);
    pos_ += n * 4;
}

void Reader::expect_magic(const std::string& magic) {
    std::size_t at = pos_;
    need(magic.size());
    for (char c : magic) {
        if (buf_[pos_++] != static_cast<std::uint8_t>(c)) {
            throw std::runtime_error("bad magic at byte offset " + std::to_string(at) +
                                     ", expected \"" + magic + "\"");
        }
    }
}

std::string fnv1a64_hex(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

std::string hash_file(const std::string& path) { return fnv1a64_hex(read_file(path)); }

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(f),
                                     std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace uret::io
