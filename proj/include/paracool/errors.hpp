#pragma once

#include <stdexcept>
#include <string>

namespace paracool {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// crystal
struct NonPositiveRadial : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct UnstableMode : Error { using Error::Error; };

// fields
struct MissingCurvature : Error { using Error::Error; };
struct InfeasibleTarget : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };

// exchange
struct ZeroCoupling : Error { using Error::Error; };
struct TruncationLeak : Error { using Error::Error; };

// cooling
struct UnknownMode : Error { using Error::Error; };
struct NoSteadyState : Error { using Error::Error; };

// fitkit
struct SingularJacobian : Error { using Error::Error; };
struct RatioOutOfRange : Error { using Error::Error; };
struct DegenerateAbscissa : Error { using Error::Error; };

// cli
struct ConfigError : Error { using Error::Error; };

} // namespace paracool
