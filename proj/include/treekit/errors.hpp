#pragma once

#include <stdexcept>
#include <string>

namespace treekit {

// Error taxonomy shared by the library and the CLI. The CLI maps these to
// exit codes: validation 2, alignment 3, I/O 4.

/// Invalid data or parameters: broken invariants, bad config values,
/// degenerate geometry, malformed file contents.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& path, size_t line, const std::string& msg)
        : ValidationError(path + ":" + std::to_string(line) + ": " + msg),
          path_(path),
          line_(line) {}

    const std::string& path() const { return path_; }
    size_t line() const { return line_; }

private:
    std::string path_;
    size_t line_;
};

/// Paired inputs (cloud vs. predictions, gt vs. pred) disagree in length.
class AlignmentError : public std::runtime_error {
public:
    explicit AlignmentError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem-level failure: missing file, unreadable, write failed.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace treekit
