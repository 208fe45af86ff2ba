#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stepwise {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// state-space
class MalformedPrefix : public Error {
    using Error::Error;
};
class EmptySteps : public Error {
  public:
    EmptySteps() : Error("build_trace: steps must not be empty") {}
};

// trace-codec
class SyntaxError : public Error {
  public:
    SyntaxError(std::size_t line, const std::string& message)
        : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
    /// 1-based line number of the offending line.
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};
class EmptyBlock : public Error {
  public:
    explicit EmptyBlock(std::size_t line)
        : Error("line " + std::to_string(line) + ": action block has no content"), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};
class SchemaError : public Error {
    using Error::Error;
};

// losses
class NonFiniteInput : public Error {
    using Error::Error;
};
class EmptyBatch : public Error {
  public:
    EmptyBatch() : Error("preference batch is empty") {}
};

// eval
class NoFinalAnswer : public Error {
    using Error::Error;
};
class Unparseable : public Error {
    using Error::Error;
};
class AllExtractionsFailed : public Error {
  public:
    AllExtractionsFailed() : Error("every sample failed answer extraction") {}
};
class EmptyInput : public Error {
    using Error::Error;
};

// datagen
class TransportError : public Error {
    using Error::Error;
};
class IoError : public Error {
    using Error::Error;
};
class ConfigError : public Error {
    using Error::Error;
};

} // namespace stepwise
