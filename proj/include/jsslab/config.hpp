#pragma once

#include <string>
#include <vector>

#include "jsslab/models.hpp"
#include "jsslab/trainer.hpp"

namespace jsslab {

struct RunConfig {
  TrainConfig train;
  ModelConfig model;
};

// Strict JSON loader: unknown fields are rejected by name; absent fields take
// the documented defaults (gamma 1.0, K 8, lr 3e-4, ...).
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& text);
std::string run_config_to_json(const RunConfig& cfg);

// Atomic file write: temp file in the same directory, then rename.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Run manifest: command, argv, resolved config, config hash, seed, version.
std::string make_manifest(const std::string& command,
                          const std::vector<std::string>& argv,
                          const std::string& config_json, std::uint64_t seed);

extern const char* kCodeVersion;

}  // namespace jsslab
