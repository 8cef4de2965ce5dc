#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dsem {

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input text (formulas, worlds, programs, rationals, JSON payloads).
struct ParseError : Error {
  int line = 0;
  int column = 0;
  ParseError(const std::string& msg, int line_ = 0, int column_ = 0)
      : Error(line_ > 0 ? msg + " (line " + std::to_string(line_) + ", column " +
                              std::to_string(column_) + ")"
                        : msg),
        line(line_),
        column(column_) {}
};

// An enumeration would exceed the configured world budget.
struct BudgetError : Error {
  std::uint64_t requested = 0;
  std::uint64_t budget = 0;
  BudgetError(const std::string& msg, std::uint64_t requested_, std::uint64_t budget_)
      : Error(msg), requested(requested_), budget(budget_) {}
};

// Semantic constraint violated (bad weights, non-subsignature, invalid parameters, ...).
struct ValidationError : Error {
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

}  // namespace dsem
