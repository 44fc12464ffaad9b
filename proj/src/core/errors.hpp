#pragma once

#include <stdexcept>
#include <string>

namespace svr {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent configuration (maps to exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

// Missing/corrupt input data or I/O failure (maps to exit code 3).
struct DataError : Error {
    using Error::Error;
};

// Non-finite loss or other numerical blow-up (maps to exit code 4).
struct DivergedError : Error {
    using Error::Error;
};

struct CapacityError : Error {
    CapacityError(const std::string& what, std::size_t unallocated)
        : Error(what), unallocated_blocks(unallocated) {}
    std::size_t unallocated_blocks = 0;
};

}  // namespace svr
