#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cora/causal_model.hpp"

namespace cora {

// Runs the command line tool; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Reads a MapDocument (.json) or a DSL model (anything else).
CausalModel load_model_file(const std::filesystem::path& path);

}  // namespace cora
