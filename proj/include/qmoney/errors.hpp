#pragma once

#include <stdexcept>
#include <string>

namespace qmoney {

// Submission referenced a serial the bank does not know (never issued, or
// destroyed after a failed strict verification). Distinct from being caught.
class UnknownSerial : public std::runtime_error {
 public:
  explicit UnknownSerial(unsigned long long serial)
      : std::runtime_error("unknown serial " + std::to_string(serial)),
        serial_(serial) {}
  unsigned long long serial() const noexcept { return serial_; }

 private:
  unsigned long long serial_;
};

// Postselected pass probability fell below the representable floor.
class UnderflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every repetition of an expectation-value estimate was caught.
class EstimationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qmoney
