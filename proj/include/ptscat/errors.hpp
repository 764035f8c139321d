#pragma once

#include <stdexcept>

namespace ptscat {

// Base class for every domain error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// scene
struct EmptyScene : Error { using Error::Error; };
struct DuplicatePoint : Error { using Error::Error; };
struct SensorOnScatterer : Error { using Error::Error; };
struct ZeroAlpha : Error { using Error::Error; };

// interaction matrix
struct NonPositiveLambda : Error { using Error::Error; };
struct SingularMatrix : Error { using Error::Error; };

// forward simulation
struct HorizonNonPositive : Error { using Error::Error; };
struct StepTooLarge : Error { using Error::Error; };
struct EvaluationAtScatterer : Error { using Error::Error; };
struct BeyondHorizon : Error { using Error::Error; };
struct NonPositiveEpsilon : Error { using Error::Error; };

// data operator
struct EmptyTrace : Error { using Error::Error; };
struct LambdaBelowSpectrum : Error { using Error::Error; };
struct TruncationTooShort : Error { using Error::Error; };

// inversion
struct SteeringAtSensor : Error { using Error::Error; };
struct ZeroOperator : Error { using Error::Error; };
struct EmptyKernel : Error { using Error::Error; };
struct NoPeaks : Error { using Error::Error; };

} // namespace ptscat
