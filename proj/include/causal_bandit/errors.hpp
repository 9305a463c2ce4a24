#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace causal_bandit {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInstance : public Error {
public:
    using Error::Error;
};

class CycleDetected : public Error {
public:
    explicit CycleDetected(std::vector<std::size_t> witness)
        : Error(describe(witness)), witness_(std::move(witness)) {}

    /// Nodes of one directed cycle, 0-based, in edge order.
    const std::vector<std::size_t>& witness() const noexcept { return witness_; }

private:
    static std::string describe(const std::vector<std::size_t>& witness) {
        std::string msg = "cycle detected:";
        for (auto v : witness) msg += " " + std::to_string(v + 1);
        return msg;
    }

    std::vector<std::size_t> witness_;
};

class TooManyArms : public Error {
public:
    using Error::Error;
};

class SolverDidNotConverge : public Error {
public:
    SolverDidNotConverge(std::size_t iterations, double residual)
        : Error("lasso did not converge after " + std::to_string(iterations) +
                " sweeps (KKT residual " + std::to_string(residual) + ")"),
          iterations_(iterations), residual_(residual) {}

    std::size_t iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    std::size_t iterations_;
    double residual_;
};

class BudgetExceeded : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace causal_bandit
