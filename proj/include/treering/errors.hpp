#pragma once

#include <stdexcept>
#include <string>

namespace treering {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// I/O and file-format failures.
struct IoFailure : Error { using Error::Error; };
struct DecodeFailure : IoFailure { using IoFailure::IoFailure; };
struct MissingShapesKey : Error { using Error::Error; };
struct MalformedPoint : Error { using Error::Error; };
struct MalformedRow : Error { using Error::Error; };
struct DuplicateName : Error { using Error::Error; };
struct DegenerateRing : Error { using Error::Error; };

// Raster / image contract violations.
struct DimensionMismatch : Error { using Error::Error; };
struct ImageTooSmall : Error { using Error::Error; };

// Spider-web geometry.
struct BadRayCount : Error { using Error::Error; };
struct CenterOutsidePolygon : Error { using Error::Error; };

// Chain connection criteria.
struct MissingSupportNode : Error { using Error::Error; };
struct ChainTooShort : Error { using Error::Error; };

// Evaluation.
struct CrossingGTRings : Error { using Error::Error; };
struct RingCountMismatch : Error { using Error::Error; };

// Measurement.
struct NonNestedRings : Error { using Error::Error; };
struct RingMissesRay : Error { using Error::Error; };
struct EmptyData : Error { using Error::Error; };
struct AllZeroPx : Error { using Error::Error; };

}  // namespace treering
