#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "privrec/config.hpp"
#include "privrec/errors.hpp"

using namespace privrec;
namespace fs = std::filesystem;

#ifndef PRIVREC_CLI_PATH
#define PRIVREC_CLI_PATH "privrec"
#endif

namespace {

const fs::path kWorkDir = fs::temp_directory_path() / "privrec_cli_test";

int run_cli(const std::string& args) {
  const std::string command = std::string(PRIVREC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

fs::path write_config(const std::string& name, const nlohmann::json& j) {
  fs::create_directories(kWorkDir);
  const fs::path path = kWorkDir / name;
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2);
  return path;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json base_config() {
  return {
      {"seed", 5},
      {"dataset",
       {{"kind", "synthetic-clustered"}, {"n_users", 20}, {"n_items", 10}, {"density", 0.8}}},
      {"plan",
       {{"subset_width", 5},
        {"sigma", 10.0},
        {"core_count", 1},
        {"neighbor_count", 64},
        {"trust_intervals", nlohmann::json::array({{{"lo", 0.0}, {"hi", 1.0}, {"d", 5}}})}}},
      {"protocol",
       {{"target_user", 0},
        {"target_key_bits", 128},
        {"mediator_key_bits", 258},
        {"allow_small_keys", true}}},
  };
}

}  // namespace

TEST_CASE("config parsing rejects unknown keys and bad values") {
  nlohmann::json j = base_config();
  CHECK_NOTHROW(config::parse_run_config(j));

  j["bogus"] = 1;
  CHECK_THROWS_AS(config::parse_run_config(j), ConfigError);

  nlohmann::json missing_path = base_config();
  missing_path["dataset"]["kind"] = "ratings-file";
  CHECK_THROWS_AS(config::parse_run_config(missing_path), ConfigError);

  nlohmann::json small_keys = base_config();
  small_keys["protocol"]["allow_small_keys"] = false;
  CHECK_THROWS_AS(config::parse_run_config(small_keys), ConfigError);

  nlohmann::json bad_theta = base_config();
  bad_theta["protocol"]["theta"] = 1.5;
  CHECK_THROWS_AS(config::parse_run_config(bad_theta), ConfigError);
}

TEST_CASE("resolved config reproduces the run configuration when fed back") {
  const config::RunConfig cfg = config::parse_run_config(base_config());
  const config::RunConfig again = config::parse_run_config(cfg.resolved);
  CHECK(again.resolved == cfg.resolved);
  CHECK(again.seed == cfg.seed);
  CHECK(again.plan.fingerprint() == cfg.plan.fingerprint());
  CHECK(again.sim.protocol_seed == cfg.sim.protocol_seed);
}

TEST_CASE("obfuscate verb writes deterministic outputs") {
  const fs::path cfg = write_config("obf.json", base_config());
  const fs::path out_a = kWorkDir / "obf_a";
  const fs::path out_b = kWorkDir / "obf_b";
  REQUIRE(run_cli("obfuscate --config " + cfg.string() + " --out " + out_a.string()) == 0);
  REQUIRE(run_cli("obfuscate --config " + cfg.string() + " --out " + out_b.string()) == 0);
  CHECK(fs::exists(out_a / "obfuscated_matrix.csv"));
  CHECK(fs::exists(out_a / "obfuscated_sidecar.json"));
  CHECK(fs::exists(out_a / "resolved_config.json"));
  CHECK(slurp(out_a / "obfuscated_matrix.csv") == slurp(out_b / "obfuscated_matrix.csv"));
  CHECK(slurp(out_a / "obfuscated_sidecar.json") == slurp(out_b / "obfuscated_sidecar.json"));
}

TEST_CASE("config validation failures exit with code 2 and missing keys are named") {
  nlohmann::json j = base_config();
  j["dataset"]["kind"] = "ratings-file";  // path missing
  const fs::path cfg = write_config("bad.json", j);
  CHECK(run_cli("obfuscate --config " + cfg.string() + " --out " + (kWorkDir / "bad_out").string()) == 2);
  CHECK(run_cli("simulate --config " + (kWorkDir / "does_not_exist.json").string() + " --out " +
                (kWorkDir / "bad_out2").string()) == 2);
}

TEST_CASE("simulate verb emits referrals, transcript, audit and is deterministic") {
  const fs::path cfg = write_config("sim.json", base_config());
  const fs::path out_a = kWorkDir / "sim_a";
  const fs::path out_b = kWorkDir / "sim_b";
  REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + out_a.string()) == 0);
  REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + out_b.string()) == 0);
  CHECK(fs::exists(out_a / "referrals.csv"));
  CHECK(fs::exists(out_a / "transcript.jsonl"));
  CHECK(slurp(out_a / "transcript.jsonl") == slurp(out_b / "transcript.jsonl"));
  CHECK(slurp(out_a / "referrals.csv") == slurp(out_b / "referrals.csv"));

  const std::string audit = slurp(out_a / "audit.json");
  CHECK(audit.find("\"pass\": true") != std::string::npos);

  const std::string referrals = slurp(out_a / "referrals.csv");
  CHECK(referrals.rfind("item_signature,predicted_rating,rank", 0) == 0);

  // A different seed changes the transcript.
  const fs::path out_c = kWorkDir / "sim_c";
  REQUIRE(run_cli("simulate --config " + cfg.string() + " --seed 99 --out " + out_c.string()) == 0);
  CHECK(slurp(out_a / "transcript.jsonl") != slurp(out_c / "transcript.jsonl"));
}

TEST_CASE("simulate verb on the paper-literal route completes with exit 0") {
  nlohmann::json j = base_config();
  j["protocol"]["route"] = "paper-literal";
  const fs::path cfg = write_config("literal.json", j);
  const fs::path out = kWorkDir / "sim_literal";
  CHECK(run_cli("simulate --config " + cfg.string() + " --out " + out.string()) == 0);
  const std::string audit = slurp(out / "audit.json");
  CHECK(audit.find("\"pass\": true") != std::string::npos);
}

TEST_CASE("experiment verb writes reports and honors --which") {
  nlohmann::json j = base_config();
  j["experiments"] = {{"fig3", {{"key_bits", {128, 256}}, {"record_count", 2}, {"repetitions", 3}}}};
  const fs::path cfg = write_config("exp.json", j);
  const fs::path out = kWorkDir / "exp_out";
  REQUIRE(run_cli("experiment --which fig3 --config " + cfg.string() + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / "fig3_key_length.csv"));
  CHECK(fs::exists(out / "fig3_key_length_summary.json"));
  CHECK(slurp(out / "fig3_key_length_summary.json").find("\"all_pass\": true") != std::string::npos);
}
