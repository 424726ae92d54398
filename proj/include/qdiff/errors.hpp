#pragma once

#include <stdexcept>
#include <string>

namespace qdiff {

/// Bad input: violated precondition, mismatched grids, unknown configuration key.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative method did not reach its tolerance, or a polynomial order
/// exceeded its configured cap.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

}  // namespace qdiff
