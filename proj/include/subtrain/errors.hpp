#pragma once

#include <stdexcept>
#include <string>

namespace subtrain {

// Invalid specification, config file, or command line (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or missing dataset files (CLI exit code 3).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values in numeric computations (CLI exit code 4 when fatal).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace subtrain
