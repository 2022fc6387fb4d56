#ifndef QUAKESEG_ERRORS_HPP
#define QUAKESEG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace quakeseg {

// Status values double as CLI exit codes (0 ok, 2 config, 3 data, 4 numeric).
// ArgumentError reports contract misuse; the CLI maps it to the config code.
enum class Status : int {
    Ok = 0,
    ConfigError = 2,
    DataError = 3,
    NumericError = 4,
    ArgumentError = 5,
};

class Error : public std::runtime_error {
public:
    Error(Status status, const std::string& msg)
        : std::runtime_error(msg), status_(status) {}
    Status status() const noexcept { return status_; }

private:
    Status status_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(Status::ConfigError, msg) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(Status::DataError, msg) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(Status::NumericError, msg) {}
};

class ArgumentError : public Error {
public:
    explicit ArgumentError(const std::string& msg) : Error(Status::ArgumentError, msg) {}
};

} // namespace quakeseg

#endif
