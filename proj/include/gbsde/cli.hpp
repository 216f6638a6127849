// SPDX-License-Identifier: MIT
/**
 * @file cli.hpp
 * @brief Command-line driver: config ingestion, runs and artifact output.
 *
 * Subcommands solve, system, converge, verify, oracle and mc read one JSON
 * config (unknown keys are rejected at every level), compute, and write a
 * run directory whose manifest.json lists every file. Exit codes: 0 success,
 * 1 numerical or check failure, 2 configuration error (nothing written).
 */
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gbsde {

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gbsde
