#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include "partforest/error.hpp"

namespace partforest::detail {

// Little-endian binary writer/reader for the model and lifter files. The
// reader tracks its byte offset so truncation errors can report it.
class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path)
        : f_(path, std::ios::binary), path_(path) {
        if (!f_) throw DataError("cannot open for writing: " + path);
    }
    void bytes(const void* p, std::size_t n) {
        f_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!f_) throw DataError("short write: " + path_);
    }
    void u32(std::uint32_t v) { bytes(&v, sizeof v); }
    void i32(std::int32_t v) { bytes(&v, sizeof v); }
    void f64(double v) { bytes(&v, sizeof v); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }

private:
    std::ofstream f_;
    std::string path_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path)
        : f_(path, std::ios::binary), path_(path) {
        if (!f_) throw DataError("cannot open: " + path);
    }
    void bytes(void* p, std::size_t n) {
        f_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (f_.gcount() != static_cast<std::streamsize>(n))
            throw FormatError("truncated file " + path_,
                              offset_ + static_cast<std::size_t>(f_.gcount()));
        offset_ += n;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, sizeof v);
        return v;
    }
    std::int32_t i32() {
        std::int32_t v;
        bytes(&v, sizeof v);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, sizeof v);
        return v;
    }
    std::string str() {
        const std::uint32_t n = u32();
        if (n > (1u << 20))
            throw FormatError("implausible string length in " + path_, offset_ - 4);
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    std::size_t offset() const { return offset_; }
    const std::string& path() const { return path_; }

private:
    std::ifstream f_;
    std::string path_;
    std::size_t offset_ = 0;
};

}  // namespace partforest::detail
