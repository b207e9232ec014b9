#pragma once

#include <stdexcept>
#include <string>

namespace pimo {

// Error classes map one-to-one onto CLI exit codes.
enum class ErrorKind : int {
  Flag = 2,
  Ingestion = 3,
  Numerical = 4,
  Degenerate = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

struct FlagError : Error {
  explicit FlagError(const std::string& what) : Error(ErrorKind::Flag, what) {}
};

struct IngestionError : Error {
  explicit IngestionError(const std::string& what) : Error(ErrorKind::Ingestion, what) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

struct DegenerateDataError : Error {
  explicit DegenerateDataError(const std::string& what) : Error(ErrorKind::Degenerate, what) {}
};

}  // namespace pimo
