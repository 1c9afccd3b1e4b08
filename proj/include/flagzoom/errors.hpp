#pragma once

#include <stdexcept>
#include <string>

namespace flagzoom {

/// Base class for all library errors. `kind()` is a stable machine-readable tag.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

#define FLAGZOOM_DEFINE_ERROR(Name)                                       \
    class Name : public Error {                                           \
    public:                                                               \
        explicit Name(const std::string& what) : Error(#Name, what) {}    \
    }

FLAGZOOM_DEFINE_ERROR(ZeroVector);
FLAGZOOM_DEFINE_ERROR(DependentRows);
FLAGZOOM_DEFINE_ERROR(NotInChart);
FLAGZOOM_DEFINE_ERROR(DimensionMismatch);
FLAGZOOM_DEFINE_ERROR(UnsupportedFamily);
FLAGZOOM_DEFINE_ERROR(BudgetExceeded);
FLAGZOOM_DEFINE_ERROR(IncompleteEnumeration);
FLAGZOOM_DEFINE_ERROR(InsufficientData);
FLAGZOOM_DEFINE_ERROR(InsufficientMass);
FLAGZOOM_DEFINE_ERROR(PrecisionLoss);
FLAGZOOM_DEFINE_ERROR(ValidationError);

#undef FLAGZOOM_DEFINE_ERROR

} // namespace flagzoom
