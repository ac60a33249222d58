#pragma once

#include <stdexcept>
#include <string>

namespace fauxcheck {

// Error classes map one-to-one onto CLI exit codes.
enum class ErrorKind { Config = 2, Data = 3, Service = 4, Internal = 5 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class ServiceError : public Error {
public:
    explicit ServiceError(const std::string& what) : Error(ErrorKind::Service, what) {}
};

[[nodiscard]] inline const char* error_class_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config: return "config_error";
        case ErrorKind::Data: return "data_error";
        case ErrorKind::Service: return "service_error";
        case ErrorKind::Internal: return "internal_error";
    }
    return "internal_error";
}

}  // namespace fauxcheck
