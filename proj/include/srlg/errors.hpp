#pragma once

#include <stdexcept>
#include <string>

namespace srlg {

// Shape mismatches and other argument misuse.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Parameter vector outside the model's admissible set (e.g. tau <= 0).
struct ThetaDomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Numerical failures carry the offending zero-based index: the pivot or
// diagonal position for factorization/solve errors, the step number for
// filter-level errors.
struct NumericalError : std::runtime_error {
  int index;
  NumericalError(const std::string& what, int idx)
      : std::runtime_error(what), index(idx) {}
};

struct NotPositiveDefinite : NumericalError {
  explicit NotPositiveDefinite(int pivot)
      : NumericalError("matrix not positive definite at pivot " +
                           std::to_string(pivot),
                       pivot) {}
};

struct SingularFactor : NumericalError {
  explicit SingularFactor(int diagonal)
      : NumericalError("triangular factor numerically singular at diagonal " +
                           std::to_string(diagonal),
                       diagonal) {}
};

struct SingularInnovation : NumericalError {
  explicit SingularInnovation(int index, const std::string& detail)
      : NumericalError("singular innovation covariance (" + detail + ")",
                       index) {}
};

}  // namespace srlg
