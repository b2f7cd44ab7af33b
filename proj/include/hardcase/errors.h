#pragma once

#include <stdexcept>

namespace hardcase {

// Error taxonomy mirrored by the CLI exit codes:
//   UsageError -> 1, DataError -> 2, BackendError -> 3, anything else -> 4.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BackendError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-retryable credential problem; aborts a batch instead of degrading it.
struct AuthError : BackendError {
    using BackendError::BackendError;
};

// Retries exhausted or connection-level failure for a single request.
struct TransportError : BackendError {
    using BackendError::BackendError;
};

struct InternalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace hardcase
