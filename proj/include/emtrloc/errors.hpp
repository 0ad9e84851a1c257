#pragma once

#include <stdexcept>
#include <string>

namespace emtrloc {

// Base class of every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Network description file violates the schema or a model invariant.
struct ParseError : Error {
    using Error::Error;
};

// A closed-form transfer function hit a near-resonant denominator.
struct ResonanceError : Error {
    using Error::Error;
};

// The nodal admittance system could not be solved.
struct SolveError : Error {
    using Error::Error;
};

// Failure modes of the transient-database binary format.
enum class DbErrorKind {
    bad_magic,
    bad_version,
    truncated,
    inconsistent,
    io,
};

struct DbError : Error {
    DbErrorKind kind;
    DbError(DbErrorKind k, const std::string& msg) : Error(msg), kind(k) {}
};

} // namespace emtrloc
