#pragma once

#include <stdexcept>
#include <string>

namespace sdcsmf {

// All library errors derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};

class NotSymmetric : public Error {
 public:
  explicit NotSymmetric(const std::string& msg) : Error(msg) {}
};

class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(const std::string& msg) : Error(msg) {}
};

class QuadratureDivergence : public Error {
 public:
  explicit QuadratureDivergence(const std::string& msg) : Error(msg) {}
};

class InvalidModel : public Error {
 public:
  explicit InvalidModel(const std::string& msg) : Error(msg) {}
};

class NoiseExceedsBound : public Error {
 public:
  explicit NoiseExceedsBound(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Terminal filter failure (solver fallbacks exhausted). The filter history up
// to the failing step is preserved by the caller.
class FilterError : public Error {
 public:
  explicit FilterError(const std::string& msg) : Error(msg) {}
};

}  // namespace sdcsmf
