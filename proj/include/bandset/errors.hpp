#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace bandset {

// A caller broke an operation's precondition (bad offset, mismatched
// dimensions, out-of-range parameter).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConstructError : public std::runtime_error {
 public:
  enum class Kind { kRetriesExhausted, kDuplicateKey };

  ConstructError(Kind kind, const std::string& what, std::optional<std::size_t> chunk = {})
      : std::runtime_error(what), kind_(kind), chunk_(chunk) {}

  Kind kind() const noexcept { return kind_; }
  // Chunk that ran out of retries, when known.
  std::optional<std::size_t> chunk() const noexcept { return chunk_; }

 private:
  Kind kind_;
  std::optional<std::size_t> chunk_;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bandset
