#pragma once

#include <stdexcept>
#include <string>

namespace aerokin {

inline constexpr const char* kToolVersion = "0.1.0";

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Contract violation (bad arguments, broken preconditions).
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& msg) : Error(msg) {}
};

// Iterative solve or sampler failed to reach its tolerance / cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, double residual)
      : Error(msg), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

#define AK_REQUIRE(cond, msg)                                   \
  do {                                                          \
    if (!(cond)) throw ::aerokin::ContractError(msg);           \
  } while (0)

}  // namespace aerokin
