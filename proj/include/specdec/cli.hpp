// Copyright 2026 The specdec Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace specdec {

/// Entry point of the `specdec` tool. Subcommands: run, sweep-k,
/// sweep-verify, gen-model, fit, compare.
///
/// Exit codes: 0 on success, 2 on flag or configuration errors, 1 on file,
/// model or I/O errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace specdec
