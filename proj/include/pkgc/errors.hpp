#pragma once
// Error types shared across the library. The CLI maps them to exit codes.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pkgc {

// Bad configuration or flag values (exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Missing or malformed input data (exit code 3).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : DataError(path + ":" + std::to_string(line) + ": " + what), path_(path), line_(line) {}

    [[nodiscard]] const std::string& path() const noexcept { return path_; }
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

class InfeasibleRatio : public ConfigError {
public:
    InfeasibleRatio(double rho, double min_rho)
        : ConfigError("rho=" + std::to_string(rho) +
                      " cannot hold every entity and relation in the known set; minimum feasible rho is " +
                      std::to_string(min_rho)),
          min_rho_(min_rho) {}

    [[nodiscard]] double min_feasible_rho() const noexcept { return min_rho_; }

private:
    double min_rho_;
};

// Non-finite loss during training (exit code 4).
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pkgc
