#pragma once

#include <string>

#include "onn/config.hpp"

namespace onn {

struct StageOptions {
  std::string out_dir;   // empty: the config's output_dir
  bool resume = false;   // skip when a manifest with the same config hash lists existing outputs
};

struct StageResult {
  bool skipped = false;
  RunManifest manifest;
  std::string summary;  // one human-readable line
};

StageResult run_simulate(const RunConfig& cfg, const StageOptions& opt);
StageResult run_program(const RunConfig& cfg, const StageOptions& opt);
StageResult run_train(const RunConfig& cfg, const StageOptions& opt);
StageResult run_filter(const RunConfig& cfg, const StageOptions& opt);
StageResult run_hybrid(const RunConfig& cfg, const StageOptions& opt);
StageResult run_bench(const RunConfig& cfg, const StageOptions& opt);

}  // namespace onn
