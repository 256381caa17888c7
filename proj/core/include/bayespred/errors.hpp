#pragma once

#include <stdexcept>
#include <string>

namespace bayespred {

// Invalid symbol index, unnormalized distribution, out-of-range parameter.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Conditioning on a history of probability zero.
class UndefinedConditional : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// 2x2 loss matrix whose threshold denominator is not positive.
class DegenerateLoss : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Exact enumeration would exceed the configured work budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or schema-violating experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bayespred
