#pragma once

#include <stdexcept>
#include <string>

namespace partforest {

// Error categories map onto the CLI exit codes: config -> 2, data -> 3,
// numerical -> 4.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// Mismatched dimensions, out-of-bounds windows and the like.
class ShapeError : public DataError {
public:
    explicit ShapeError(const std::string& msg) : DataError(msg) {}
};

// Malformed or truncated files; carries the byte offset where parsing stopped.
class FormatError : public DataError {
public:
    FormatError(const std::string& msg, std::size_t byte_offset)
        : DataError(msg + " at byte " + std::to_string(byte_offset)),
          byte_offset(byte_offset) {}
    std::size_t byte_offset;
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

}  // namespace partforest
