// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/cli.hpp"

int main(int argc, char** argv) { return sardet::cli::run(argc, argv); }
