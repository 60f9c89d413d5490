#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace infinichain {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidKernel : public Error {
 public:
  using Error::Error;
};

class UndeterminedProbability : public Error {
 public:
  using Error::Error;
};

class ContextSpaceTooLarge : public Error {
 public:
  using Error::Error;
};

class PastTooShort : public Error {
 public:
  PastTooShort(int needed_range, std::int64_t time)
      : Error("past too short: range " + std::to_string(needed_range) + " needed at time " +
              std::to_string(time)),
        needed_range_(needed_range),
        time_(time) {}
  int needed_range() const { return needed_range_; }
  std::int64_t time() const { return time_; }

 private:
  int needed_range_;
  std::int64_t time_;
};

class NoResidualMass : public Error {
 public:
  using Error::Error;
};

class NegativeLeftover : public Error {
 public:
  using Error::Error;
};

class WindowCapExceeded : public Error {
 public:
  explicit WindowCapExceeded(std::int64_t cap)
      : Error("no coalescence within window cap " + std::to_string(cap)), cap_(cap) {}
  std::int64_t cap() const { return cap_; }

 private:
  std::int64_t cap_;
};

class CoalescenceViolation : public Error {
 public:
  using Error::Error;
};

class OrderTooHigh : public Error {
 public:
  using Error::Error;
};

class UnseenContext : public Error {
 public:
  using Error::Error;
};

class KTooLarge : public Error {
 public:
  using Error::Error;
};

class KTooSmall : public Error {
 public:
  using Error::Error;
};

class InvalidR : public Error {
 public:
  using Error::Error;
};

class CrTooLarge : public Error {
 public:
  using Error::Error;
};

class DivergenceCheckFailed : public Error {
 public:
  using Error::Error;
};

class NonSummable : public Error {
 public:
  using Error::Error;
};

}  // namespace infinichain
