#ifndef CTSIM_ERROR_HPP
#define CTSIM_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ctsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// kernel
class CoincidentPositions : public Error { public: using Error::Error; };
class ZeroArea : public Error { public: using Error::Error; };
class InvalidParameter : public Error { public: using Error::Error; };

// trajectory
class EmptyTrack : public Error { public: using Error::Error; };
class SchemaError : public Error { public: using Error::Error; };
class ValidationError : public Error { public: using Error::Error; };

/// Malformed input text; carries the 1-based line and column of the offending field.
class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string &what)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
          line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

// epidemic
class UnknownPerson : public Error { public: using Error::Error; };
class FrameRosterMismatch : public Error { public: using Error::Error; };

// scenario
class NoTeacher : public Error { public: using Error::Error; };

// metrics
class SinglePerson : public Error { public: using Error::Error; };
class EmptyCollection : public Error { public: using Error::Error; };
class MixedCohorts : public Error { public: using Error::Error; };

// synthgen
class ConfigError : public Error { public: using Error::Error; };

} // namespace ctsim

#endif
