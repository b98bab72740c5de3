#pragma once

#include <stdexcept>
#include <string>

namespace mci {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad argument shapes or values passed across a module boundary.
class ShapeError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace mci
