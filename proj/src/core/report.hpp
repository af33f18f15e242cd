#pragma once

#include <string>

namespace synteval {

/// Assemble a model report from an experiment results directory: report.md
/// plus copies of the matrix and curve CSVs. Numbers are read back from the
/// stored result files only.
void emit_model_report(const std::string& results_dir, const std::string& out_dir);

}  // namespace synteval
