#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace marsbid {

// Error hierarchy. Each family maps onto one CLI exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class DataError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class PrerequisiteError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

class DivergenceError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

class CheckpointError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << std::forward<Args>(args));
  return oss.str();
}

}  // namespace detail

template <typename E = std::invalid_argument, typename... Args>
inline void require(bool condition, Args&&... message) {
  if (!condition) throw E(detail::concat(std::forward<Args>(message)...));
}

}  // namespace marsbid
