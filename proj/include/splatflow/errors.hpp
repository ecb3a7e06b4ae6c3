// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>

namespace splatflow {

// Root of the library error hierarchy. Everything thrown on purpose derives
// from this, so callers can catch one type at the boundary.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Projection produced a homogeneous w too close to zero to divide.
class DegenerateProjection : public Error {
public:
    using Error::Error;
};

// Covariance projection requested for a point at or behind the camera plane.
class BehindCamera : public Error {
public:
    using Error::Error;
};

// Point lies outside the (z_near, z_far) depth range of a camera.
class Clipped : public Error {
public:
    using Error::Error;
};

// Flow file does not start with the expected magic tag.
class BadMagic : public Error {
public:
    using Error::Error;
};

// Flow file ends before the declared payload is complete.
class TruncatedFile : public Error {
public:
    using Error::Error;
};

// Declared flow dimensions are non-positive or exceed the supported limit.
class DimensionOverflow : public Error {
public:
    using Error::Error;
};

// Output stream or file refused bytes mid-write.
class SinkError : public Error {
public:
    using Error::Error;
};

// Input file cannot be opened at all (missing or unreadable), as opposed to
// opening fine and being malformed.
class FileUnreadable : public Error {
public:
    using Error::Error;
};

// An operation that reduces over valid pixels was given a mask with none.
class EmptyMask : public Error {
public:
    using Error::Error;
};

// Two grids that must share a shape do not.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// Input grid is smaller than the operator's support.
class TooSmall : public Error {
public:
    using Error::Error;
};

// A config value violates its documented range or structure.
class ConfigInvalid : public Error {
public:
    using Error::Error;
};

// Dataset output root cannot be created or written.
class OutputUnwritable : public Error {
public:
    using Error::Error;
};

} // namespace splatflow
