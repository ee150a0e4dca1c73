#pragma once

#include <stdexcept>
#include <string>

namespace sumalign {

// Input files or records that cannot be used. The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A pair whose summary has zero probability under the current parameters.
class UnalignableError : public std::runtime_error {
 public:
  explicit UnalignableError(const std::string& pair_id)
      : std::runtime_error("pair '" + pair_id + "' is unalignable under the current parameters"),
        pair_id_(pair_id) {}
  const std::string& pair_id() const { return pair_id_; }

 private:
  std::string pair_id_;
};

// Broken numerical invariants (negative counts, inconsistent normalizers, ...). Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sumalign
