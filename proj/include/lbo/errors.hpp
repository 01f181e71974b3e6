#pragma once

#include <stdexcept>
#include <string>

namespace lbo {

/// A numerical procedure failed: non-convergence, singular factorization, or a
/// quantity outside its valid range.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace lbo
