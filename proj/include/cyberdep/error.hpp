#pragma once

#include <stdexcept>
#include <string>

namespace cyberdep {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unreadable input or unwritable output.
class IoError : public Error {
public:
    using Error::Error;
};

/// Input that is readable but violates a documented contract
/// (topology invariants, profile invariants, manifest rules, graph schema).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A conditional-probability query that references unknown nodes.
class QueryError : public Error {
public:
    using Error::Error;
};

/// Numeric argument outside its mathematical domain.
class DomainError : public Error {
public:
    using Error::Error;
};

}  // namespace cyberdep
