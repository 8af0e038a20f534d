// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lagm {

/// Lowercases and splits on anything that is not a letter, digit,
/// apostrophe or hyphen. Punctuation never produces a token.
std::vector<std::string> tokenize(std::string_view text);

/// Tokens re-joined with single spaces.
std::string normalize_text(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end);

}  // namespace lagm
