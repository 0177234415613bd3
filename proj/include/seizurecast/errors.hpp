#pragma once

#include <stdexcept>
#include <string>

namespace seizurecast {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Tensor extents or layer geometry do not line up.
struct ShapeError : Error {
    using Error::Error;
};

// A caller-supplied value is out of range or inconsistent.
struct ParamError : Error {
    using Error::Error;
};

// On-disk data is malformed, truncated, or inconsistent with its metadata.
struct ParseError : Error {
    using Error::Error;
};

// A dataset cannot support the requested operation (empty class, no leads).
struct DataError : Error {
    using Error::Error;
};

// Optimization failed: missing gradients, non-finite values.
struct TrainingError : Error {
    using Error::Error;
};

// A metric is undefined for the given sample set.
struct MetricError : Error {
    using Error::Error;
};

// Filesystem failures while reading or writing artifacts.
struct IoError : Error {
    using Error::Error;
};

} // namespace seizurecast
