#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace depsev {

enum class ErrorKind {
  Io,
  Parse,
  Validation,
  NotFound,
  Network,
  Protocol,
  Version,
  Corrupt,
  Config,
};

std::string_view to_string(ErrorKind kind);

// Every failure in the toolkit surfaces as an Error carrying a kind the CLI
// and service can map onto exit codes and HTTP statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace depsev
