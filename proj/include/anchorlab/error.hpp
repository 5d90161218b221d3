#pragma once

#include <stdexcept>
#include <string>

namespace anchorlab {

/// Coarse classification used by the CLI to pick an exit code.
enum class ErrorCategory { Config, Numeric, Assumption };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

#define ANCHORLAB_DEFINE_ERROR(Name, Category)                              \
    class Name : public Error {                                             \
    public:                                                                 \
        explicit Name(const std::string& what)                              \
            : Error(ErrorCategory::Category, #Name ": " + what) {}          \
    }

// input / configuration problems
ANCHORLAB_DEFINE_ERROR(DomainError, Config);
ANCHORLAB_DEFINE_ERROR(EmptyInput, Config);
ANCHORLAB_DEFINE_ERROR(ParseError, Config);
ANCHORLAB_DEFINE_ERROR(MissingColumn, Config);
ANCHORLAB_DEFINE_ERROR(NonNumericPredictor, Config);
ANCHORLAB_DEFINE_ERROR(DimensionMismatch, Config);
ANCHORLAB_DEFINE_ERROR(InvalidConfig, Config);
ANCHORLAB_DEFINE_ERROR(EmptyLevel, Config);
ANCHORLAB_DEFINE_ERROR(InsufficientLevels, Config);

// numerical failures
ANCHORLAB_DEFINE_ERROR(NotPositiveDefinite, Numeric);
ANCHORLAB_DEFINE_ERROR(SingularDesign, Numeric);
ANCHORLAB_DEFINE_ERROR(Underidentified, Numeric);
ANCHORLAB_DEFINE_ERROR(Singular, Numeric);

// structural assumptions of the causal model
ANCHORLAB_DEFINE_ERROR(CyclicGraph, Assumption);
ANCHORLAB_DEFINE_ERROR(ProjectabilityViolated, Assumption);
ANCHORLAB_DEFINE_ERROR(AssumptionViolated, Assumption);

#undef ANCHORLAB_DEFINE_ERROR

}  // namespace anchorlab
