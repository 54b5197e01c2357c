#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vcache {

// Every failure mode in the pipeline carries one of these kinds. Tests and
// the CLI dispatch on the kind; the message is for humans.
enum class ErrorKind {
    // wire format
    UnbalancedLoop,
    StrayBindingToken,
    MissingOuterTemp,
    NonConsecutiveRuns,
    UnbalancedTag,
    BareGapMarker,
    // assembler
    FetchFailed,
    ParseFailed,
    ArityMismatch,
    KindMismatch,
    MissingTemplate,
    CycleSuspected,
    // miniscript
    SyntaxError,
    UndefinedVar,
    TypeError,
    // branch statistics
    UnknownSite,
    EmptyStore,
    InsufficientRuns,
    // binding generation
    UnregisteredDoc,
    // harness / plumbing
    BadConfig,
    ReconstructionMismatch,
    Io,
    Network,
};

std::string_view error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
          kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace vcache
