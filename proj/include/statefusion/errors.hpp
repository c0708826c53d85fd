#pragma once

#include <stdexcept>
#include <string>

namespace statefusion {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input files or inconsistent dimensions supplied by a caller.
class ValidationError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

/// A relatedness value could not be obtained (no cache entry and no usable network).
class FetchError : public Error {
public:
    using Error::Error;
};

/// A knowledge endpoint answered with a non-success HTTP status.
class SourceError : public Error {
public:
    SourceError(int status, const std::string& what) : Error(what), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

}  // namespace statefusion
