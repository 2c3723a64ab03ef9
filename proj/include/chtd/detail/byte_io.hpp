#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "chtd/error.hpp"

namespace chtd::detail {

/// Little-endian encoder into a byte buffer.
class ByteWriter {
public:
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

    const std::vector<char>& buffer() const noexcept { return buf_; }
    std::vector<char> take() { return std::move(buf_); }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
    std::vector<char> buf_;
};

/// Little-endian decoder; every read past the end throws CorruptFile with the offset.
class ByteReader {
public:
    explicit ByteReader(const std::vector<char>& buf) : buf_(buf) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s(buf_.data() + pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return buf_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (buf_.size() - pos_ < n) throw CorruptFile("truncated file", pos_);
    }
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    const std::vector<char>& buf_;
    std::size_t pos_ = 0;
};

std::vector<char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<char>& bytes);

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

}  // namespace chtd::detail
