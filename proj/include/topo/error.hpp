#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"

namespace topo {

// Validation errors are the caller's fault (bad input, bad parameters).
// Numerical errors mean the input is fine but the grid, cutoff or tolerance
// is not adequate for a trustworthy answer.
enum class ErrorClass { Validation, Numerical };

class Error : public std::runtime_error {
 public:
  Error(std::string kind, ErrorClass cls, const std::string& detail,
        nlohmann::json data = nlohmann::json::object())
      : std::runtime_error(kind + ": " + detail),
        kind_(std::move(kind)),
        cls_(cls),
        data_(std::move(data)) {}

  const std::string& kind() const { return kind_; }
  ErrorClass error_class() const { return cls_; }
  const nlohmann::json& data() const { return data_; }

 private:
  std::string kind_;
  ErrorClass cls_;
  nlohmann::json data_;
};

[[noreturn]] inline void validation_error(const std::string& kind, const std::string& detail,
                                          nlohmann::json data = nlohmann::json::object()) {
  throw Error(kind, ErrorClass::Validation, detail, std::move(data));
}

[[noreturn]] inline void numerical_error(const std::string& kind, const std::string& detail,
                                         nlohmann::json data = nlohmann::json::object()) {
  throw Error(kind, ErrorClass::Numerical, detail, std::move(data));
}

}  // namespace topo
