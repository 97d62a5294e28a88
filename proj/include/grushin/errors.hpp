#pragma once

#include <stdexcept>
#include <string>

namespace grushin {

// Argument outside the mathematical domain of an operation (e.g. x <= 0).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Malformed configuration or invalid combination of inputs.
class UsageError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure broke down (step underflow, singular pivot, ...).
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Two independent classification routes disagree; never resolved silently.
class InconclusiveError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A simulation protocol was violated (e.g. mass reached the outer wall).
class ProtocolError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace grushin
