#pragma once

#include <stdexcept>
#include <string>

namespace fatou {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FATOU_DEFINE_ERROR(Name)                  \
  class Name : public Error {                     \
   public:                                        \
    explicit Name(const std::string& what)        \
        : Error(std::string(#Name ": ") + what) {} \
  }

FATOU_DEFINE_ERROR(UnknownGenerator);
FATOU_DEFINE_ERROR(InvalidPresentation);
FATOU_DEFINE_ERROR(InvalidArgument);
FATOU_DEFINE_ERROR(BudgetExceeded);
FATOU_DEFINE_ERROR(NotGenerating);
FATOU_DEFINE_ERROR(StepBudgetExceeded);
FATOU_DEFINE_ERROR(NeverExited);
FATOU_DEFINE_ERROR(OutOfTabulatedRange);
FATOU_DEFINE_ERROR(SolverFailure);
FATOU_DEFINE_ERROR(DivisionUnstable);
FATOU_DEFINE_ERROR(NotStabilized);
FATOU_DEFINE_ERROR(DegenerateRow);
FATOU_DEFINE_ERROR(PreconditionViolated);
// Raised by operations whose meaning relies on hyperbolicity when handed a
// Lattice backend (the negative control).
FATOU_DEFINE_ERROR(NonHyperbolicWarning);

#undef FATOU_DEFINE_ERROR

}  // namespace fatou
