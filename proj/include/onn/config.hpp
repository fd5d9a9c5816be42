#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "onn/bench.hpp"
#include "onn/cnn.hpp"
#include "onn/conv.hpp"
#include "onn/learning.hpp"

namespace onn {

struct NetworkBlock {
  int size = 4;                       // oscillators
  OscillatorUnit unit{};              // template for every unit (delay ignored)
  double steps_per_period = 2000.0;
  double periods = 12.0;
  int sample_every = 1;
  std::string coupling_file;          // empty: Hebbian-programmed from patterns
  std::string patterns_file;          // empty: the four edge patterns of the size
  std::vector<double> pixels;         // input pattern in [-1, 1]; empty: all white
  VariabilitySpec variability{};
  bool trim = true;
};

struct TrainInstance {
  Pattern pixels;
  Pattern target;
};

struct LearningBlock {
  ResistanceMap map{};
  TrainSpec train{};
  std::vector<TrainInstance> instances;
};

struct ConvBlock {
  FilterSpec filter{};  // filter.filter is built from the network block
  std::string images;
  std::string labels;
  std::string fmap_dir;  // cached filtered dataset; empty: computed in the run
  int n_train = 6000;
  int n_test = 4000;
};

struct CnnBlock {
  CnnHyper hyper{};
  int n_calib = 100;
  bool control = false;  // also retrain with an empty plan
};

/// Parsed run configuration. Relative paths are resolved against the
/// directory of the config file and must exist.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  DeviceParams device{};
  NetworkBlock network{};
  ReadoutSpec codec{};
  LearningBlock learning{};
  ConvBlock conv{};
  CnnBlock cnn{};
  BenchConfig bench{};
  std::string hash;  // of the canonical JSON form

  [[nodiscard]] NetworkConfig network_config() const;
  [[nodiscard]] NetworkConfig filter_template() const;
};

/// Throws Error(kConfig) on unknown keys, wrong types, invalid values or
/// unresolvable paths.
RunConfig parse_config(const std::string& json_text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// Per-stage derived RNG stream (documented: mix_seed(seed, stage_id)).
std::uint64_t stage_seed(std::uint64_t seed, const std::string& stage);

struct RunManifest {
  std::string config_hash;
  std::string version;
  std::string stage;
  std::string started;
  std::string finished;
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;

  void write(const std::string& path) const;
  static std::optional<RunManifest> read(const std::string& path);
};

/// Timestamp for manifests: SOURCE_DATE_EPOCH when set, else the clock.
std::string manifest_timestamp();

const char* library_version() noexcept;

/// FNV-1a 64 of a byte string, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace onn
