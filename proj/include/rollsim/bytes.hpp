#pragma once

// Canonical byte encodings: big-endian integers, u32-length-prefixed variable
// fields. Every consensus object has exactly one encoding; decoders are
// strict (bounds-checked, full-consumption) and throw DecodeError on any
// malformed input so callers can treat "decodes" as "well-formed".

#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rollsim/digest.hpp"

namespace rollsim {

struct DecodeError : std::runtime_error {
    explicit DecodeError(const std::string& what) : std::runtime_error("decode: " + what) {}
};

using Bytes = std::vector<std::uint8_t>;

class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) {
        buf_.push_back(static_cast<std::uint8_t>(v >> 8));
        buf_.push_back(static_cast<std::uint8_t>(v));
    }
    void u32(std::uint32_t v) {
        for (int s = 24; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
    }
    void u64(std::uint64_t v) {
        for (int s = 56; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
    }
    void raw(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    void digest(const Digest& d) { raw(d.bytes); }
    void var_bytes(std::span<const std::uint8_t> b) {
        if (b.size() > std::numeric_limits<std::uint32_t>::max())
            throw std::length_error("var_bytes too large");
        u32(static_cast<std::uint32_t>(b.size()));
        raw(b);
    }
    void str(std::string_view s) {
        var_bytes(std::span<const std::uint8_t>(
            reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
    }

    const Bytes& bytes() const& { return buf_; }
    Bytes take() && { return std::move(buf_); }

private:
    Bytes buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8() { return take(1)[0]; }
    std::uint16_t u16() {
        auto b = take(2);
        return static_cast<std::uint16_t>(b[0] << 8 | b[1]);
    }
    std::uint32_t u32() {
        auto b = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = v << 8 | b[i];
        return v;
    }
    std::uint64_t u64() {
        auto b = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = v << 8 | b[i];
        return v;
    }
    Digest digest() {
        auto b = take(32);
        Digest d;
        std::memcpy(d.data(), b.data(), 32);
        return d;
    }
    Bytes var_bytes() {
        std::uint32_t n = u32();
        auto b = take(n);
        return Bytes(b.begin(), b.end());
    }
    std::string str() {
        std::uint32_t n = u32();
        auto b = take(n);
        return std::string(reinterpret_cast<const char*>(b.data()), b.size());
    }
    std::span<const std::uint8_t> raw(std::size_t n) { return take(n); }

    std::size_t remaining() const { return data_.size() - pos_; }
    bool exhausted() const { return pos_ == data_.size(); }
    void expect_end() const {
        if (!exhausted()) throw DecodeError("trailing bytes");
    }

private:
    std::span<const std::uint8_t> take(std::size_t n) {
        if (remaining() < n) throw DecodeError("truncated input");
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

inline std::string to_hex(std::span<const std::uint8_t> b) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(b.size() * 2);
    for (auto c : b) {
        out.push_back(kDigits[c >> 4]);
        out.push_back(kDigits[c & 0xf]);
    }
    return out;
}

inline Bytes from_hex(std::string_view s) {
    if (s.size() % 2 != 0) throw DecodeError("odd hex length");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw DecodeError("bad hex digit");
    };
    Bytes out(s.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint8_t>(nibble(s[2 * i]) << 4 | nibble(s[2 * i + 1]));
    return out;
}

}  // namespace rollsim
