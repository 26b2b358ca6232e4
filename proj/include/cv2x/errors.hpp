#pragma once

#include <stdexcept>
#include <string>

namespace cv2x {

/// Invalid configuration or parameter value.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input file missing, unreadable or empty.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed line in an input file.
class ParseError : public InputError {
public:
    ParseError(const std::string& file, int line, const std::string& what)
        : InputError(file + ":" + std::to_string(line) + ": " + what), line_(line)
    {
    }

    int line() const { return line_; }

private:
    int line_;
};

}  // namespace cv2x
