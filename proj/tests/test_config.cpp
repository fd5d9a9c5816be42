#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "onn/config.hpp"
#include "onn/error.hpp"

using namespace onn;
namespace fs = std::filesystem;

namespace {

ErrorCode parse_code(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

}  // namespace

TEST_CASE("defaults from an empty document") {
  const auto c = parse_config("{}");
  CHECK(c.seed == 1);
  CHECK(c.network.size == 4);
  CHECK(c.device.r_ins == DeviceParams{}.r_ins);
  CHECK(c.hash.size() == 16);
}

TEST_CASE("unknown keys and bad values are rejected") {
  CHECK(parse_code(R"({"sede": 3})") == ErrorCode::kConfig);
  CHECK(parse_code(R"({"device": {"r_ins": 5}})") == ErrorCode::kConfig);
  CHECK(parse_code(R"({"device": {"r_ins_ohm": "big"}})") == ErrorCode::kConfig);
  CHECK(parse_code(R"({"device": {"r_ins_ohm": 10, "r_met_ohm": 100}})") == ErrorCode::kConfig);
  CHECK(parse_code(R"({"network": {"size": 0}})") == ErrorCode::kConfig);
  CHECK(parse_code(R"({"learning": {"delta": 0.5}})") == ErrorCode::kConfig);
  CHECK(parse_code("{not json") == ErrorCode::kConfig);
  CHECK(parse_code(R"({"conv": {"images": "/definitely/missing.idx"}})") == ErrorCode::kConfig);
}

TEST_CASE("hash follows content, not formatting") {
  const auto a = parse_config(R"({"seed": 5, "network": {"size": 9}})");
  const auto b = parse_config("{\n  \"network\": {\"size\": 9},\n  \"seed\": 5\n}");
  const auto c = parse_config(R"({"seed": 6, "network": {"size": 9}})");
  CHECK(a.hash == b.hash);
  CHECK(a.hash != c.hash);
}

TEST_CASE("stage seeds differ per stage and are stable") {
  CHECK(stage_seed(1, "filter") == stage_seed(1, "filter"));
  CHECK(stage_seed(1, "filter") != stage_seed(1, "hybrid"));
  CHECK(stage_seed(1, "filter") != stage_seed(2, "filter"));
}

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("manifest round trip and fixed timestamps") {
  setenv("SOURCE_DATE_EPOCH", "0", 1);
  CHECK(manifest_timestamp() == "1970-01-01T00:00:00Z");
  unsetenv("SOURCE_DATE_EPOCH");

  const auto dir = fs::temp_directory_path() / "onn_test_config";
  fs::create_directories(dir);
  RunManifest m;
  m.config_hash = "0123456789abcdef";
  m.version = library_version();
  m.stage = "bench";
  m.started = m.finished = "1970-01-01T00:00:00Z";
  m.outputs = {"bench.json"};
  const auto path = (dir / "manifest_bench.json").string();
  m.write(path);
  const auto back = RunManifest::read(path);
  REQUIRE(back.has_value());
  CHECK(back->config_hash == m.config_hash);
  CHECK(back->outputs == m.outputs);
  CHECK_FALSE(RunManifest::read((dir / "missing.json").string()).has_value());
  fs::remove_all(dir);
}

TEST_CASE("relative paths resolve against the config directory") {
  const auto dir = fs::temp_directory_path() / "onn_test_paths";
  fs::create_directories(dir);
  { std::ofstream(dir / "pats.txt") << "1 -1 1 -1\n"; }
  { std::ofstream(dir / "run.json") << R"({"network": {"patterns_file": "pats.txt"}})"; }
  const auto c = load_config((dir / "run.json").string());
  CHECK(fs::path(c.network.patterns_file) == dir / "pats.txt");
  fs::remove_all(dir);
}
