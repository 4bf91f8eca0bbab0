#pragma once

#include <stdexcept>
#include <string>

namespace achronal {

enum class ErrorKind {
    domain,            // argument outside the mathematical domain
    invalid_argument,  // malformed input (non-unit axis, bad matrix, ...)
    support,           // packet support touches or escapes the grid margin
    grid_mismatch,     // packets on different grids or masses
    factorization,     // low-rank kernel factorization missed its tolerance
    fold_over,         // surface transform inverse failed to converge
    unsupported,       // geometry without a closed form
    overlap,           // partition masks intersect
    determinacy,       // determinacy sets differ where they must agree
    degenerate_fit,    // decay fit without enough resolvable samples
    io,                // file format or filesystem failure
    config,            // configuration schema violation
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

}  // namespace achronal
