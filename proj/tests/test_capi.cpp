#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "doctest.h"
#include "onn/onn_c.h"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ONN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(onn_version()) == "1.0.0");
  CHECK(std::string(onn_status_name(ONN_BAD_MAGIC)) == "BadMagic");
  CHECK(std::string(onn_status_name(ONN_INTERNAL)) == "Internal");
}

TEST_CASE("units and periods") {
  onn_unit u;
  onn_unit_default(&u);
  double t = 0.0;
  onn_error err;
  REQUIRE(onn_relaxation_period(&u, &t, &err) == ONN_OK);
  CHECK(t > 0.0);
  u.r_met = u.r_ins;
  CHECK(onn_relaxation_period(&u, &t, &err) == ONN_INVARIANT_VIOLATED);
  CHECK(err.code == ONN_INVARIANT_VIOLATED);
  CHECK(std::string(err.message).find("r_ins") != std::string::npos);
  CHECK(onn_relaxation_period(nullptr, &t, &err) == ONN_INVALID_ARGUMENT);
}

TEST_CASE("programmed network through the C interface") {
  onn_unit u;
  onn_unit_default(&u);
  const double pats[] = {1, -1, 1, -1, 1, 1, -1, -1, 1, -1, -1, 1, -1, 1, 1, -1};
  onn_network* net = nullptr;
  onn_error err;
  REQUIRE(onn_network_program(4, &u, pats, 4, &net, &err) == ONN_OK);
  CHECK(onn_network_size(net) == 4);
  double ph[4];
  int locked[4];
  REQUIRE(onn_network_phases(net, pats, 12.0, ph, locked, &err) == ONN_OK);
  CHECK(ph[0] == 0.0);
  CHECK(std::abs(ph[1] - 180.0) < 30.0);
  CHECK((ph[2] < 30.0 || ph[2] > 330.0));
  CHECK(std::abs(ph[3] - 180.0) < 30.0);
  onn_network_free(net);

  const double bad[] = {1, 2};
  CHECK(onn_network_program(2, &u, bad, 1, &net, &err) != ONN_OK);
}

TEST_CASE("explicit coupling must be symmetric") {
  onn_unit u;
  onn_unit_default(&u);
  const double inf = INFINITY;
  const double r[] = {inf, 1e5, 2e5, inf};
  const double c[] = {0, 0, 0, 0};
  onn_network* net = nullptr;
  onn_error err;
  CHECK(onn_network_create(2, &u, r, c, &net, &err) == ONN_INVARIANT_VIOLATED);
  CHECK(net == nullptr);
  const double rs[] = {inf, 1e5, 1e5, inf};
  REQUIRE(onn_network_create(2, &u, rs, c, &net, &err) == ONN_OK);
  onn_network_free(net);
}

TEST_CASE("pure helpers") {
  const double p[] = {1, -1, 1, -1, 1, 1, -1, -1, 1, -1, -1, 1, -1, 1, 1, -1};
  double w[16];
  onn_error err;
  REQUIRE(onn_hebbian(p, 4, 4, w, &err) == ONN_OK);
  CHECK(std::abs(w[1]) == 0.5);
  CHECK(w[3] == 0.0);

  const double ph[9] = {180, 0, 180, 180, 0, 180, 180, 0, 180};
  int f[5];
  REQUIRE(onn_detect_features(ph, 9, 30.0, f, &err) == ONN_OK);
  CHECK(f[0] == 1);
  CHECK(f[4] == 0);
  CHECK(onn_detect_features(ph, 5, 30.0, f, &err) == ONN_UNSUPPORTED_SIZE);

  CHECK(onn_count_params_reduction(5, 3) == doctest::Approx(20.0));
  CHECK(std::isnan(onn_count_params_reduction(0, 3)));
}

TEST_CASE("config handles, overrides and the bench report") {
  const auto dir = fs::temp_directory_path() / "onn_test_capi";
  fs::create_directories(dir);
  { std::ofstream(dir / "run.json") << "{\"seed\": 3}"; }
  onn_config* cfg = nullptr;
  onn_error err;
  CHECK(onn_config_load((dir / "nope.json").c_str(), &cfg, &err) == ONN_CONFIG);
  REQUIRE(onn_config_load((dir / "run.json").c_str(), &cfg, &err) == ONN_OK);

  char h1[17];
  char h2[17];
  REQUIRE(onn_config_hash(cfg, h1, sizeof h1) == ONN_OK);
  CHECK(onn_config_hash(cfg, h2, 4) == ONN_INVALID_ARGUMENT);
  REQUIRE(onn_config_set(cfg, "output_dir", dir.c_str(), &err) == ONN_OK);
  onn_config_hash(cfg, h2, sizeof h2);
  CHECK(std::string(h1) == h2);
  REQUIRE(onn_config_set(cfg, "conv.n_train", "10", &err) == ONN_OK);
  onn_config_hash(cfg, h2, sizeof h2);
  CHECK(std::string(h1) != h2);
  CHECK(onn_config_set(cfg, "conv.n_train", "ten", &err) != ONN_OK);
  CHECK(onn_config_set(cfg, "nonsense", "1", &err) == ONN_CONFIG);

  size_t need = 0;
  REQUIRE(onn_bench_report(cfg, "json", nullptr, 0, &need, &err) == ONN_OK);
  std::vector<char> buf(need);
  REQUIRE(onn_bench_report(cfg, "json", buf.data(), buf.size(), &need, &err) == ONN_OK);
  CHECK(std::string(buf.data()).find("frames_per_s") != std::string::npos);
  CHECK(onn_bench_report(cfg, "xml", nullptr, 0, &need, &err) == ONN_INVALID_ARGUMENT);

  int skipped = -1;
  char summary[256];
  REQUIRE(onn_run_stage(cfg, "bench", nullptr, 0, &skipped, summary, sizeof summary, &err) == ONN_OK);
  CHECK(skipped == 0);
  CHECK(fs::exists(dir / "bench.json"));
  REQUIRE(onn_run_stage(cfg, "bench", nullptr, 1, &skipped, summary, sizeof summary, &err) == ONN_OK);
  CHECK(skipped == 1);
  CHECK(onn_run_stage(cfg, "dance", nullptr, 0, &skipped, nullptr, 0, &err) == ONN_INVALID_ARGUMENT);
  onn_config_free(cfg);
  fs::remove_all(dir);
}

TEST_CASE("command-line exit codes") {
  const auto dir = fs::temp_directory_path() / "onn_test_cli";
  fs::create_directories(dir);
  { std::ofstream(dir / "run.json") << "{}"; }
  { std::ofstream(dir / "bad.json") << "{\"bogus\": 1}"; }
  const std::string out = " --out " + (dir / "o").string();
  CHECK(run_cli("bench --params " + (dir / "run.json").string() + out) == 0);
  CHECK(fs::exists(dir / "o" / "bench.json"));
  CHECK(fs::exists(dir / "o" / "manifest_bench.json"));
  CHECK(run_cli("bench --params " + (dir / "bad.json").string() + out) == 2);
  CHECK(run_cli("bench --params " + (dir / "missing.json").string() + out) == 2);
  CHECK(run_cli("frobnicate") == 2);
  fs::remove_all(dir);
}
