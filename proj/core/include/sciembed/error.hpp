#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace sciembed {

// Base for every error the toolkit raises. Callers that only need to tell
// "bad input data" apart from "bad usage" can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Vector or matrix dimensions disagree.
class DimensionError : public ContractError {
 public:
  DimensionError(const std::string& what, std::size_t expected, std::size_t actual)
      : ContractError(what + " (expected " + std::to_string(expected) + ", got " +
                      std::to_string(actual) + ")"),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

// Pooling was asked to average over an empty selection of rows.
class EmptyPoolError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Requested more components or neighbours than the data supports, or the
// inputs are linearly dependent where independence is required.
class RankError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Binary or text input does not follow its declared format. Carries the byte
// offset (or line number for text formats) and, where known, the record id.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset,
              std::optional<std::uint64_t> pmid = std::nullopt)
      : Error(compose(what, offset, pmid)), offset_(offset), pmid_(pmid) {}

  std::uint64_t offset() const noexcept { return offset_; }
  std::optional<std::uint64_t> pmid() const noexcept { return pmid_; }

 private:
  static std::string compose(const std::string& what, std::uint64_t offset,
                             std::optional<std::uint64_t> pmid) {
    std::string msg = what;
    if (pmid) msg += " [pmid " + std::to_string(*pmid) + "]";
    msg += " at offset " + std::to_string(offset);
    return msg;
  }

  std::uint64_t offset_;
  std::optional<std::uint64_t> pmid_;
};

// Filesystem or stream failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sciembed
