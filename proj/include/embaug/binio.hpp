#pragma once

#include "embaug/common.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>

namespace embaug {

/// Little-endian binary writer; byte order is spelled out so files are
/// portable regardless of host endianness.
class BinWriter {
public:
    explicit BinWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw ContractError("cannot open " + path + " for writing");
    }

    void bytes(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }
    void magic(const char tag[4]) { bytes(tag, 4); }

    void u32(std::uint32_t v) {
        char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        bytes(b, 4);
    }

    void u64(std::uint64_t v) {
        char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        bytes(b, 8);
    }

    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void close() {
        out_.close();
        if (!out_) throw ContractError("failed writing " + path_);
    }

private:
    std::string path_;
    std::ofstream out_;
};

/// Little-endian binary reader that reports truncation and corruption as
/// ParseError at the byte offset where the failing field begins.
class BinReader {
public:
    BinReader(const std::string& path, std::string what)
        : what_(std::move(what)), in_(path, std::ios::binary) {
        if (!in_) throw ContractError("cannot open " + path + " for reading");
    }

    std::uint64_t offset() const { return offset_; }

    /// Reads 4 bytes at the current position and insists they match.
    void expect_magic(const char tag[4]) {
        const std::uint64_t at = offset_;
        char got[4] = {};
        in_.read(got, 4);
        if (in_.gcount() != 4 || got[0] != tag[0] || got[1] != tag[1] || got[2] != tag[2] ||
            got[3] != tag[3]) {
            throw ParseError(what_ + ": bad magic (expected \"" + std::string(tag, 4) + "\")", at);
        }
        offset_ += 4;
    }

    std::uint32_t u32(const std::string& context) {
        std::uint32_t v = 0;
        read_le(context, 4, v);
        return v;
    }

    std::uint64_t u64(const std::string& context) {
        std::uint64_t v = 0;
        read_le(context, 8, v);
        return v;
    }

    float f32(const std::string& context) { return std::bit_cast<float>(u32(context)); }
    double f64(const std::string& context) { return std::bit_cast<double>(u64(context)); }

    void expect_eof() {
        char extra;
        in_.read(&extra, 1);
        if (in_.gcount() != 0) {
            throw ParseError(what_ + ": trailing bytes after expected end", offset_);
        }
    }

    [[noreturn]] void fail(const std::string& why, std::uint64_t at) const {
        throw ParseError(what_ + ": " + why, at);
    }
    [[noreturn]] void fail(const std::string& why) const { fail(why, offset_); }

private:
    template <typename T>
    void read_le(const std::string& context, int n, T& out) {
        const std::uint64_t at = offset_;
        unsigned char b[8];
        in_.read(reinterpret_cast<char*>(b), n);
        if (in_.gcount() != n) {
            throw ParseError(what_ + ": truncated while reading " + context, at);
        }
        out = 0;
        for (int i = 0; i < n; ++i) out |= static_cast<T>(b[i]) << (8 * i);
        offset_ += static_cast<std::uint64_t>(n);
    }

    std::string what_;
    std::ifstream in_;
    std::uint64_t offset_ = 0;
};

}  // namespace embaug
