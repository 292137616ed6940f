#pragma once

#include <stdexcept>
#include <string>

namespace cora {

// Base of every error the library throws. `code` is the stable machine tag
// used in service error bodies.
class CoraError : public std::runtime_error {
public:
    CoraError(std::string code, const std::string& message, std::string detail = {})
        : std::runtime_error(message), code_(std::move(code)), detail_(std::move(detail)) {}

    const std::string& code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string code_;
    std::string detail_;
};

struct InvalidArgument : CoraError {
    explicit InvalidArgument(const std::string& message, std::string detail = {})
        : CoraError("invalid_argument", message, std::move(detail)) {}
};

struct NotFound : CoraError {
    explicit NotFound(const std::string& message, std::string detail = {})
        : CoraError("not_found", message, std::move(detail)) {}
};

struct Conflict : CoraError {
    explicit Conflict(const std::string& message, std::string detail = {})
        : CoraError("conflict", message, std::move(detail)) {}
};

// JSON document does not match its schema; detail carries the JSON path.
struct SchemaError : CoraError {
    SchemaError(const std::string& path, const std::string& message)
        : CoraError("schema_error", path + ": " + message, path) {}
};

struct StorageError : CoraError {
    explicit StorageError(const std::string& message, std::string detail = {})
        : CoraError("storage_error", message, std::move(detail)) {}
};

}  // namespace cora
