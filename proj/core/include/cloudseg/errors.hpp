#pragma once

#include <stdexcept>
#include <string>

namespace cloudseg {

// File or stream problem. Validation problems use std::invalid_argument.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace cloudseg
