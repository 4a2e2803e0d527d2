#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kglab {

enum class ErrorCode {
    InvalidArgument,
    SpectrumTooClose,
    SqrtBranch,
    RiccatiBlowup,
    EllipticityLost,
    BoundaryTail,
    InsufficientRange,
    FloorMissing,
    ToleranceExceeded,
    SizeCap,
    SingularSystem,
    NoContraction,
    QuadratureFailure,
    WindowTooShort,
    ZeroDatum,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Precondition problems (bad parameters) as opposed to numerical failures.
bool is_precondition(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool cond, ErrorCode code, const std::string& what)
{
    if (!cond) fail(code, what);
}

} // namespace kglab
