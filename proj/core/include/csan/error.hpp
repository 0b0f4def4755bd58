#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace csan {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input: bad model, bad policy, bad arguments to an
// operation whose preconditions are part of the model.
class ModelError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ModelError {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : ModelError(message + " at " + std::to_string(line) + ":" + std::to_string(column)),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// A gate function would produce a negative token count.
class DomainError : public Error {
 public:
  using Error::Error;
};

class AlphabetMismatch : public ModelError {
 public:
  using ModelError::ModelError;
};

// Exploration or sampling ran out of its configured budget.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(const std::string& message, std::size_t frontier)
      : Error(message + " (frontier size " + std::to_string(frontier) + ")"), frontier_(frontier) {}

  std::size_t frontier() const { return frontier_; }

 private:
  std::size_t frontier_;
};

class ZenoError : public BudgetExceeded {
 public:
  ZenoError(const std::string& message, std::size_t events) : BudgetExceeded(message, events) {}
};

}  // namespace csan
