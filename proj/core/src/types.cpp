#include "hqd/types.hpp"

#include <sstream>

namespace hqd {

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::NonHermitianHamiltonian: return "NonHermitianHamiltonian";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::EmptyCouplings: return "EmptyCouplings";
        case Errc::NegativeTime: return "NegativeTime";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::ZeroTemperature: return "ZeroTemperature";
        case Errc::PoleOnRealAxis: return "PoleOnRealAxis";
        case Errc::DegeneratePoles: return "DegeneratePoles";
        case Errc::BosonicUntruncated: return "BosonicUntruncated";
        case Errc::GridMismatch: return "GridMismatch";
        case Errc::InsufficientTrajectories: return "InsufficientTrajectories";
        case Errc::AlgebraMismatch: return "AlgebraMismatch";
        case Errc::UnpairedGenerators: return "UnpairedGenerators";
        case Errc::InvalidSpectralDensity: return "InvalidSpectralDensity";
        case Errc::SchemaError: return "SchemaError";
        case Errc::IncompatibleSolver: return "IncompatibleSolver";
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::StepUnderflow: return "StepUnderflow";
        case Errc::NonFiniteState: return "NonFiniteState";
        case Errc::QuadratureNotConverged: return "QuadratureNotConverged";
        case Errc::EigDecompositionFailed: return "EigDecompositionFailed";
        case Errc::SpectrumSignificantlyNegative: return "SpectrumSignificantlyNegative";
        case Errc::SpaceTooLarge: return "SpaceTooLarge";
        case Errc::TooManyGenerators: return "TooManyGenerators";
        case Errc::DimensionGuard: return "DimensionGuard";
    }
    return "UnknownError";
}

int errc_exit_code(Errc c) {
    switch (c) {
        case Errc::StepUnderflow:
        case Errc::NonFiniteState:
        case Errc::QuadratureNotConverged:
        case Errc::EigDecompositionFailed:
        case Errc::SpectrumSignificantlyNegative:
            return 3;
        case Errc::SpaceTooLarge:
        case Errc::TooManyGenerators:
        case Errc::DimensionGuard:
            return 4;
        default:
            return 2;
    }
}

double hermiticity_defect(const Matrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

SystemSpec validate_system(SystemSpec spec) {
    const auto d = spec.dim;
    require(d > 0, Errc::DimensionMismatch, "system dimension must be positive");
    require(spec.hamiltonian.rows() == d && spec.hamiltonian.cols() == d, Errc::DimensionMismatch,
            "hamiltonian is not D x D");
    if (double defect = hermiticity_defect(spec.hamiltonian); defect > 1e-12) {
        std::ostringstream msg;
        msg << "max |H - H^dag| element = " << defect;
        fail(Errc::NonHermitianHamiltonian, msg.str());
    }
    require(!spec.couplings.empty(), Errc::EmptyCouplings, "at least one coupling operator required");
    for (std::size_t j = 0; j < spec.couplings.size(); ++j) {
        const auto& l = spec.couplings[j];
        if (l.rows() != d || l.cols() != d) {
            std::ostringstream msg;
            msg << "coupling " << j << " is " << l.rows() << " x " << l.cols() << ", expected " << d
                << " x " << d;
            fail(Errc::DimensionMismatch, msg.str());
        }
    }
    return spec;
}

TimeGrid validate_grid(TimeGrid grid) {
    require(grid.steps > 0, Errc::InvalidArgument, "time grid needs at least one step");
    require(grid.t1 > grid.t0, Errc::InvalidArgument, "time grid requires t1 > t0");
    return grid;
}

} // namespace hqd
