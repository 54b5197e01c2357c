#include "vcache/error.hpp"

namespace vcache {

std::string_view error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::UnbalancedLoop: return "UnbalancedLoop";
        case ErrorKind::StrayBindingToken: return "StrayBindingToken";
        case ErrorKind::MissingOuterTemp: return "MissingOuterTemp";
        case ErrorKind::NonConsecutiveRuns: return "NonConsecutiveRuns";
        case ErrorKind::UnbalancedTag: return "UnbalancedTag";
        case ErrorKind::BareGapMarker: return "BareGapMarker";
        case ErrorKind::FetchFailed: return "FetchFailed";
        case ErrorKind::ParseFailed: return "ParseFailed";
        case ErrorKind::ArityMismatch: return "ArityMismatch";
        case ErrorKind::KindMismatch: return "KindMismatch";
        case ErrorKind::MissingTemplate: return "MissingTemplate";
        case ErrorKind::CycleSuspected: return "CycleSuspected";
        case ErrorKind::SyntaxError: return "SyntaxError";
        case ErrorKind::UndefinedVar: return "UndefinedVar";
        case ErrorKind::TypeError: return "TypeError";
        case ErrorKind::UnknownSite: return "UnknownSite";
        case ErrorKind::EmptyStore: return "EmptyStore";
        case ErrorKind::InsufficientRuns: return "InsufficientRuns";
        case ErrorKind::UnregisteredDoc: return "UnregisteredDoc";
        case ErrorKind::BadConfig: return "BadConfig";
        case ErrorKind::ReconstructionMismatch: return "ReconstructionMismatch";
        case ErrorKind::Io: return "Io";
        case ErrorKind::Network: return "Network";
    }
    return "UnknownError";
}

}  // namespace vcache
