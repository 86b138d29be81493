#pragma once

#include <stdexcept>
#include <string>

namespace warm {

// Thrown when a computation produced a non-finite value (diverged training
// step, NaN in a finite-difference probe, ...). Invalid inputs use
// std::invalid_argument instead.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace warm
