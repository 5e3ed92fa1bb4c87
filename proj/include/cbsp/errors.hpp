#pragma once

#include <stdexcept>
#include <string>

namespace cbsp {

// Base class for everything the library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input text; carries the 1-based line number
// when one is known (0 otherwise).
struct ParseError : Error {
    int line = 0;
    explicit ParseError(const std::string& msg, int line_no = 0)
        : Error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg),
          line(line_no) {}
};

// Input that parsed fine but violates a model precondition (mass balance,
// transport feasibility, bad run configuration, ...).
struct ValidationError : Error {
    using Error::Error;
};

// Numerical failure past the tolerances we are prepared to absorb
// (e.g. a factorization that fails even after regularization).
struct NumericError : Error {
    using Error::Error;
};

}  // namespace cbsp
