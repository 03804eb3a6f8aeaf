#ifndef CTRG_ERRORS_HPP
#define CTRG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ctrg {

// Index dimensions do not line up with what an operation requires.
struct shape_error : std::runtime_error {
    explicit shape_error(const std::string& msg) : std::runtime_error(msg) {}
};

// An argument is malformed (bad permutation, repeated index, non-positive value...).
struct argument_error : std::runtime_error {
    explicit argument_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite data, failed decomposition, non-positive contraction value.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Problem size exceeds a hard enumeration/memory bound.
struct capacity_error : std::runtime_error {
    explicit capacity_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operation called on a state that cannot accept it (e.g. nothing left to absorb).
struct state_error : std::runtime_error {
    explicit state_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ctrg

#endif
