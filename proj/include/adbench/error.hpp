#pragma once

#include <stdexcept>
#include <string>

namespace adbench {

enum class ErrorKind {
  Parse,        // malformed input text
  Unsupported,  // input uses a feature outside the supported subset
  Topology,     // dangling or inconsistent map links
  Geometry,     // degenerate or invalid geometry
  NoRoute,      // start and goal are not connected
  Placement,    // actor or anchor outside the drivable area
  Lifecycle,    // operation called in the wrong state
  Numeric,      // non-finite value encountered
  Config,       // invalid or incomplete configuration
  InfeasibleDetour,
  Partition,    // overlapping scenario segments
  Io,           // file could not be read or written
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace adbench
