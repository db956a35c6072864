#ifndef LADDERKIT_ERRORS_HPP_
#define LADDERKIT_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace ladderkit {

// Error taxonomy mirrored by the CLI exit codes: config errors exit 2,
// I/O errors (including malformed media/CSV input) exit 3, model errors
// (bundle schema, missing anchors, dimension mismatches) exit 4.

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ladderkit

#endif  // LADDERKIT_ERRORS_HPP_
