#pragma once

#include <stdexcept>
#include <string>

namespace cellpic {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A caller broke an operation's precondition (unsorted store, neutral push, ...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// A particle would cross more cells (or subdomains) in one step than allowed.
class CflViolation : public Error {
public:
    using Error::Error;
};

/// Requested particle storage exceeds the configured memory cap.
class AllocationError : public Error {
public:
    using Error::Error;
};

/// Grid too small for the requested operation.
class SizeError : public Error {
public:
    using Error::Error;
};

/// Scheduler misuse: submission after shutdown, unbalanced data regions.
class SchedulerError : public Error {
public:
    using Error::Error;
};

} // namespace cellpic
