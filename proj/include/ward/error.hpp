#pragma once

#include <stdexcept>
#include <string>

namespace ward {

// Error taxonomy shared by every module. The CLI maps kinds to exit codes:
// validation/domain/schema/config/contract/not_found -> 1, transport/server -> 2.
enum class ErrorKind {
    validation,
    domain,
    schema,
    io,
    config,
    transport,
    server,
    contract,
    not_found,
    generation,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string &message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string &message) {
    throw Error(kind, message);
}

inline const char *error_kind_name(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::domain: return "domain";
    case ErrorKind::schema: return "schema";
    case ErrorKind::io: return "io";
    case ErrorKind::config: return "config";
    case ErrorKind::transport: return "transport";
    case ErrorKind::server: return "server";
    case ErrorKind::contract: return "contract";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::generation: return "generation";
    }
    return "unknown";
}

} // namespace ward
