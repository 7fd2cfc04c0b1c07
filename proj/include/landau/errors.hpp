#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace landau {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ZeroMass : public Error {
public:
    using Error::Error;
};

class GridTooLarge : public Error {
public:
    using Error::Error;
};

class CubeTooSmall : public Error {
public:
    using Error::Error;
};

class CorruptSnapshot : public Error {
public:
    using Error::Error;
};

class EntropyViolation : public Error {
public:
    EntropyViolation(const std::string& what, double excess)
        : Error(what), excess(excess) {}
    double excess;
};

class ExponentOverflow : public Error {
public:
    ExponentOverflow(const std::string& what, int last_valid_n)
        : Error(what), last_valid_n(last_valid_n) {}
    int last_valid_n;
};

class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, std::vector<double> best_iterate,
                   std::vector<double> residual_history, long step = -1)
        : Error(what),
          best_iterate(std::move(best_iterate)),
          residual_history(std::move(residual_history)),
          step(step) {}
    std::vector<double> best_iterate;
    std::vector<double> residual_history;
    long step;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line(line) {}
    int line;
};

}  // namespace landau
