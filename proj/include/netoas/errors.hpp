#pragma once

#include <stdexcept>
#include <string>

namespace netoas {

// Base of every error the engine raises. Each failure mode named by the
// module contracts gets its own type so callers can catch precisely.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define NETOAS_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                     \
    public:                                                         \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

NETOAS_DEFINE_ERROR(ContractViolation);
NETOAS_DEFINE_ERROR(FormatError);
NETOAS_DEFINE_ERROR(DegenerateRegion);
NETOAS_DEFINE_ERROR(CalibrationConflict);
NETOAS_DEFINE_ERROR(BadRingSeed);
NETOAS_DEFINE_ERROR(NotCalibrated);
NETOAS_DEFINE_ERROR(VersionError);
NETOAS_DEFINE_ERROR(BadSeed);
NETOAS_DEFINE_ERROR(FlowLost);
NETOAS_DEFINE_ERROR(AmbiguousStart);
NETOAS_DEFINE_ERROR(InsufficientData);
NETOAS_DEFINE_ERROR(DegenerateLabels);
NETOAS_DEFINE_ERROR(Conflict);
NETOAS_DEFINE_ERROR(SourceStall);

#undef NETOAS_DEFINE_ERROR

}  // namespace netoas
