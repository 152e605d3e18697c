#pragma once

#include <stdexcept>
#include <string>

namespace fedsim {

// Bad or missing configuration. CLI maps this to exit code 1.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data. CLI maps this to exit code 2.
struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Training produced NaN/Inf parameters. CLI maps this to exit code 3.
struct divergence_error : std::runtime_error {
    int round = -1;
    int client = -1;
    explicit divergence_error(const std::string& msg, int round_ = -1, int client_ = -1)
        : std::runtime_error(msg), round(round_), client(client_) {}
};

} // namespace fedsim
