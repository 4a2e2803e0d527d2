#include "kglab/error.hpp"

namespace kglab {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SpectrumTooClose: return "SpectrumTooClose";
    case ErrorCode::SqrtBranch: return "SqrtBranch";
    case ErrorCode::RiccatiBlowup: return "RiccatiBlowup";
    case ErrorCode::EllipticityLost: return "EllipticityLost";
    case ErrorCode::BoundaryTail: return "BoundaryTail";
    case ErrorCode::InsufficientRange: return "InsufficientRange";
    case ErrorCode::FloorMissing: return "FloorMissing";
    case ErrorCode::ToleranceExceeded: return "ToleranceExceeded";
    case ErrorCode::SizeCap: return "SizeCap";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NoContraction: return "NoContraction";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::WindowTooShort: return "WindowTooShort";
    case ErrorCode::ZeroDatum: return "ZeroDatum";
    }
    return "Unknown";
}

bool is_precondition(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::EllipticityLost:
    case ErrorCode::BoundaryTail:
    case ErrorCode::InsufficientRange:
    case ErrorCode::SizeCap:
    case ErrorCode::WindowTooShort:
    case ErrorCode::ZeroDatum:
        return true;
    default:
        return false;
    }
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(what), code_(code)
{
}

void fail(ErrorCode code, const std::string& what)
{
    throw Error(code, what);
}

} // namespace kglab
