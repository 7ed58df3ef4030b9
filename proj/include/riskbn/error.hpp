#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace riskbn {

// Base of every error raised by the library. The CLI maps these to exit
// code 1 and the service maps them to the {code, message, details} envelope.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message) : Error("parse_error", message) {}
};

// Carries every violated invariant, each prefixed with its field path.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error("validation_error", join(violations)), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> violations_;
};

class LookupError : public Error {
 public:
  explicit LookupError(const std::string& message) : Error("lookup_error", message) {}
};

class ZeroProbabilityEvidence : public Error {
 public:
  ZeroProbabilityEvidence()
      : Error("zero_probability_evidence", "zero-probability evidence") {}
};

class OracleTooLarge : public Error {
 public:
  explicit OracleTooLarge(const std::string& message) : Error("oracle_too_large", message) {}
};

class ClassificationError : public Error {
 public:
  explicit ClassificationError(const std::string& message)
      : Error("classification_error", message) {}
};

class ConfigurationError : public Error {
 public:
  explicit ConfigurationError(const std::string& message)
      : Error("configuration_error", message) {}
};

class DataError : public Error {
 public:
  DataError(std::string code, const std::string& message) : Error(std::move(code), message) {}
};

}  // namespace riskbn
