#pragma once

#include <stdexcept>
#include <string>

namespace s2sg {

// Error taxonomy shared across the library. The kind maps 1:1 onto the
// C API status codes and the CLI exit codes.
class Error : public std::runtime_error {
  public:
    enum class Kind {
        io,          // unreadable files, filesystem failures
        format,      // structurally broken inputs (bad zip, non-deck archive)
        parse,       // unparseable text payloads (JSON files, LLM replies)
        validation,  // well-formed input violating an invariant
        config,      // bad configuration, missing credentials
        runtime,     // transport failures, exhausted retries
    };

    Error(Kind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

  private:
    Kind kind_;
};

inline Error io_error(std::string msg) { return Error(Error::Kind::io, std::move(msg)); }
inline Error format_error(std::string msg) { return Error(Error::Kind::format, std::move(msg)); }
inline Error parse_error(std::string msg) { return Error(Error::Kind::parse, std::move(msg)); }
inline Error validation_error(std::string msg) { return Error(Error::Kind::validation, std::move(msg)); }
inline Error config_error(std::string msg) { return Error(Error::Kind::config, std::move(msg)); }
inline Error runtime_error(std::string msg) { return Error(Error::Kind::runtime, std::move(msg)); }

}  // namespace s2sg
