#pragma once

#include <stdexcept>
#include <string>

namespace ltree
{

// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Incompatible operand shapes; the message names the op kind and shapes.
class ShapeError : public Error
{
public:
    using Error::Error;
};

// A forward value or an adjoint became NaN or infinite.
class NumericError : public Error
{
public:
    using Error::Error;
};

// Precondition violated (bad argument, invalid mode, out-of-range value).
class InvalidArgument : public Error
{
public:
    using Error::Error;
};

// Malformed file, checksum mismatch or unsupported format version.
class FormatError : public Error
{
public:
    using Error::Error;
};

// Invalid run configuration; the CLI maps this to exit code 2.
class ConfigError : public Error
{
public:
    using Error::Error;
};

}
