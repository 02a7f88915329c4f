#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace segm {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error hierarchy. The CLI maps these onto exit codes 2/3/4.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad arguments, violated preconditions, invalid configuration.
class UsageError : public Error {
public:
    using Error::Error;
};

// Malformed or degenerate input data.
class DataError : public Error {
public:
    using Error::Error;
};

// Optimizer or linear-algebra failure.
class NumericalError : public Error {
public:
    using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw UsageError(msg);
}

}  // namespace segm
