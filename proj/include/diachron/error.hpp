#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace diachron {

// Base for every data/validation failure raised by the library. The CLI maps
// these to exit code 2; anything else escaping is treated as internal.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EncodingError : public Error {
public:
    EncodingError(const std::string& what, std::size_t byte_offset)
        : Error(what + " at byte offset " + std::to_string(byte_offset)), offset_(byte_offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class LoadError : public Error {
public:
    using Error::Error;
};

class CatalogError : public Error {
public:
    using Error::Error;
};

class AlignmentError : public Error {
public:
    using Error::Error;
};

// Precondition on numeric input (lengths, variances, weights) not satisfied.
class DomainError : public Error {
public:
    using Error::Error;
};

}  // namespace diachron
