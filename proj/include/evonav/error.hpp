#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evonav {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invariant or precondition violated by the caller.
class ContractError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " (offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class BackendError : public Error {
public:
    BackendError(const std::string& what, int plan_index = -1)
        : Error(plan_index >= 0 ? what + " (plan " + std::to_string(plan_index) + ")" : what),
          plan_index_(plan_index) {}
    int plan_index() const { return plan_index_; }

private:
    int plan_index_;
};

}  // namespace evonav
