#pragma once

#include <stdexcept>
#include <string>

namespace twolevel {

// Invalid user input: malformed config files, out-of-range parameters,
// inconsistent windows, unknown names.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// A numerical routine could not reach its accuracy target (step-size
// underflow, quadrature tolerance not met, degenerate data).
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem failures while reading or writing artifacts.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace twolevel
