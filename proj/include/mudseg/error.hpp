#pragma once

#include <stdexcept>
#include <string>

namespace mudseg {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// File content is not a supported raster (bad magic, bit depth, color type).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Sidecar metadata is missing required fields or malformed.
class MetadataError : public Error {
public:
    using Error::Error;
};

/// A value violates a documented invariant (class code range, dimensions...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

}  // namespace mudseg
