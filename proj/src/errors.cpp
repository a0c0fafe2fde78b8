#include "impiss/errors.hpp"

namespace impiss {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Domain: return "domain error";
        case ErrorKind::Bracketing: return "bracketing error";
        case ErrorKind::ClassViolation: return "class violation";
        case ErrorKind::Argument: return "argument error";
        case ErrorKind::RateSign: return "rate-sign error";
        case ErrorKind::Image: return "image error";
        case ErrorKind::BlowUp: return "blow-up";
        case ErrorKind::Range: return "range error";
        case ErrorKind::Grid: return "grid error";
        case ErrorKind::SegmentBoundary: return "segment-boundary error";
        case ErrorKind::Precondition: return "precondition error";
        case ErrorKind::Sequence: return "sequence error";
        case ErrorKind::Orientation: return "orientation error";
        case ErrorKind::Construction: return "construction error";
        case ErrorKind::Config: return "config error";
    }
    return "error";
}

}  // namespace impiss
