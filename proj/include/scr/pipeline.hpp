#pragma once

#include <string>
#include <vector>

#include "scr/config.hpp"
#include "scr/errors.hpp"

namespace scr::pipeline {

// Batch stages in dependency order. Each reads the previous stage's
// artifact files from output_dir and writes its own plus a manifest.
// `all` is the sequential composition of filter..eval; bench-llm runs
// separately per prompting mode.
const std::vector<std::string>& stage_names();

// Throws ConfigError for unusable configs and StageError when a required
// input artifact is missing; other scr::Errors propagate from modules.
void run_stage(const std::string& name, const PipelineConfig& cfg,
               const std::string& bench_mode = "zero_shot");

}  // namespace scr::pipeline
