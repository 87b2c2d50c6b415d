#pragma once

#include <stdexcept>
#include <string>

namespace ovmot {

// Every failure the engine reports derives from Error so callers can catch
// one base type at the CLI boundary.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidBox : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class EmptyHistory : public Error {
public:
    EmptyHistory() : Error("track history is empty") {}
};

class ScorerUnavailable : public Error {
public:
    using Error::Error;
};

class MalformedResponse : public Error {
public:
    using Error::Error;
};

class MissingScore : public Error {
public:
    using Error::Error;
};

class SizeExceeded : public Error {
public:
    using Error::Error;
};

class NonMonotonicFrame : public Error {
public:
    using Error::Error;
};

class InsufficientHistory : public Error {
public:
    using Error::Error;
};

class EmptyGroundTruth : public Error {
public:
    EmptyGroundTruth() : Error("ground truth is empty; MOTA is undefined") {}
};

class ParseError : public Error {
public:
    using Error::Error;
};

class SchemaVersionMismatch : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace ovmot
