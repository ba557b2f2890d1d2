#pragma once

#include <stdexcept>
#include <string>

namespace fedmdm {

enum class ErrorKind {
  contract,          // caller broke a precondition (shapes, sums, sizes)
  domain,            // numeric argument outside a function's domain
  data,              // malformed input file or record
  degenerate_client, // every component assigns zero probability to a client
  partition,         // plan cannot be materialized from the pool
  numeric,           // numerical failure inside an algorithm
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what)
      : Error(ErrorKind::contract, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(ErrorKind::domain, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class DegenerateClientError : public Error {
 public:
  explicit DegenerateClientError(const std::string& what)
      : Error(ErrorKind::degenerate_client, what) {}
};

class PartitionError : public Error {
 public:
  explicit PartitionError(const std::string& what)
      : Error(ErrorKind::partition, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorKind::numeric, what) {}
};

}  // namespace fedmdm
