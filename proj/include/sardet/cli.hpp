// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <string>
#include <vector>

namespace sardet::cli {

/// Dispatch for the sardet tool. Exit codes: 0 success, 1 validation error
/// (usage, config, malformed inputs), 2 runtime failure.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace sardet::cli
