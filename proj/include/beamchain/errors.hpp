#pragma once

#include <stdexcept>
#include <string>

namespace beamchain {

struct ChainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// model / configuration
struct NonPositiveCoefficient : ChainError { using ChainError::ChainError; };
struct ZeroLengthSegment : ChainError { using ChainError::ChainError; };
struct DimensionMismatch : ChainError { using ChainError::ChainError; };
struct SingularBoundaryMatrix : ChainError { using ChainError::ChainError; };
struct ParseError : ChainError { using ChainError::ChainError; };
struct SchemaError : ChainError { using ChainError::ChainError; };

// discretize
struct UnsupportedClosure : ChainError { using ChainError::ChainError; };
struct AssemblyDimension : ChainError { using ChainError::ChainError; };

// spectral
struct ConvergenceFailure : ChainError { using ChainError::ChainError; };
struct DimensionTooLarge : ChainError { using ChainError::ChainError; };
struct EmptySpectrum : ChainError { using ChainError::ChainError; };

// timestep
struct SingularSystem : ChainError { using ChainError::ChainError; };

}  // namespace beamchain
