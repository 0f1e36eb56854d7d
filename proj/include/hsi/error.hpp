#pragma once

#include <stdexcept>
#include <string>

namespace hsi {

// Base error for invalid inputs, malformed files and numerical failures.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised by the pipeline driver; what() is "[stage] message".
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message)
        : Error("[" + stage + "] " + message), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace hsi
