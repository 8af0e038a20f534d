// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace lagm {

/// Base error carrying a short machine-readable code next to the message.
/// The CLI and the HTTP service surface `code()` verbatim.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
    explicit InvalidArgument(const std::string& message) : Error("invalid_argument", message) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t byte_offset)
        : Error("parse_error", message + " (byte offset " + std::to_string(byte_offset) + ")"),
          byte_offset_(byte_offset) {}

    std::size_t byte_offset() const noexcept { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

class VersionError : public Error {
public:
    explicit VersionError(const std::string& message) : Error("version_mismatch", message) {}
};

class NoActionFound : public Error {
public:
    explicit NoActionFound(const std::string& text)
        : Error("no_action_found", "no motion verb recognized in \"" + text + "\"") {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& message) : Error("non_finite", message) {}
};

#define LAGM_CHECK(cond, msg)                                                       \
    do {                                                                            \
        if (!(cond)) throw ::lagm::InvalidArgument(std::string(msg));               \
    } while (false)

}  // namespace lagm
