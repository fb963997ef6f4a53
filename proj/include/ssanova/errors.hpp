#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ssanova {

// Base for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad argument to a pure function (domain violation, index out of range).
struct ArgumentError : Error {
    using Error::Error;
};

// Model-specification validation failure; carries the full problem list.
struct SpecError : Error {
    std::vector<std::string> problems;
    explicit SpecError(std::vector<std::string> probs)
        : Error(join(probs)), problems(std::move(probs)) {}

  private:
    static std::string join(const std::vector<std::string>& probs) {
        std::string s = "invalid model spec:";
        for (const auto& p : probs) s += "\n  - " + p;
        return s;
    }
};

// CSV schema/parse problems.
struct DataError : Error {
    using Error::Error;
};

// Numerical failure during fitting (singular system, degenerate criterion).
struct FitError : Error {
    using Error::Error;
};

// Filesystem / stream failure.
struct IoError : Error {
    using Error::Error;
};

}  // namespace ssanova
