#pragma once

#include <stdexcept>
#include <string>

namespace isac {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScenarioError : Error {
    using Error::Error;
};

/// Round-trip delay exceeds the maximum resolvable path index L.
struct TapOutOfRange : Error {
    using Error::Error;
};

/// Two targets map to the same delay tap for some BS.
struct ResolvabilityViolation : Error {
    using Error::Error;
};

struct CollinearAnchors : Error {
    using Error::Error;
};

/// Ghost detection found no consistent solution (corrupted input).
struct NoFeasibleSolution : Error {
    using Error::Error;
};

/// Pruned association set is empty; caller should widen delta0 and retry.
struct EmptyFeasibleSet : Error {
    using Error::Error;
};

/// Exhaustive search size bounds exceeded.
struct ComplexityGuard : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

} // namespace isac
