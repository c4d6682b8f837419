#pragma once

#include <stdexcept>
#include <string>

namespace kdm {

// Raised when a linear-algebra step cannot be completed (non-PD matrix after
// flooring, rank collapse, non-finite values). Bad arguments use
// std::invalid_argument instead.
class NumericalError : public std::runtime_error
{
public:
  explicit NumericalError(const std::string& what)
    : std::runtime_error(what)
  {}
};

} // namespace kdm
