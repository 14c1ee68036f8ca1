// errors.hpp — error codes and the exception type shared by all modules

#pragma once

#include <stdexcept>
#include <string>

namespace hqd {

enum class Errc {
    // validation / configuration
    NonHermitianHamiltonian,
    DimensionMismatch,
    EmptyCouplings,
    NegativeTime,
    LengthMismatch,
    ZeroTemperature,
    PoleOnRealAxis,
    DegeneratePoles,
    BosonicUntruncated,
    GridMismatch,
    InsufficientTrajectories,
    AlgebraMismatch,
    UnpairedGenerators,
    InvalidSpectralDensity,
    SchemaError,
    IncompatibleSolver,
    InvalidArgument,
    // numerical failures
    StepUnderflow,
    NonFiniteState,
    QuadratureNotConverged,
    EigDecompositionFailed,
    SpectrumSignificantlyNegative,
    // resource guards
    SpaceTooLarge,
    TooManyGenerators,
    DimensionGuard,
};

const char* errc_name(Errc c);

// Exit-code classes used by the CLI: 2 = schema/validation, 3 = numerical, 4 = guard.
int errc_exit_code(Errc c);

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const { return code_; }

  private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
    if (!cond) fail(code, what);
}

} // namespace hqd
