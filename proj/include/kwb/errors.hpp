#pragma once

#include <stdexcept>
#include <string>

namespace kwb {

// Every library failure derives from Error so callers can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DegenerateIlluminant : public Error {
public:
    using Error::Error;
};

// The statistic an estimator or fit relies on vanished (constant image, no valid pixels, ...).
class DegenerateScene : public Error {
public:
    using Error::Error;
};

class InvalidMetadata : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ClusteringFailure : public Error {
public:
    using Error::Error;
};

}  // namespace kwb
