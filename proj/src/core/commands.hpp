#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

namespace synteval {

/// Execute one named command with a JSON options document. Commands mirror
/// the CLI subcommands: simulate, fit-gen, eval-subgroups, shift-sweep,
/// shift-prior, oracle-compare, report. Throws Error on failure.
void run_command(const std::string& name, const nlohmann::json& options);

}  // namespace synteval
