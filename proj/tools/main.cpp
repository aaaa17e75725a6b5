#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "privrec/config.hpp"
#include "privrec/errors.hpp"
#include "privrec/eval.hpp"
#include "privrec/experiments.hpp"
#include "privrec/obfuscation.hpp"
#include "privrec/protocol.hpp"

namespace {

namespace fs = std::filesystem;
using namespace privrec;

constexpr int kExitOk = 0;
constexpr int kExitAssertionFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAuditFailed = 3;

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_resolved_config(const config::RunConfig& cfg, const fs::path& out_dir) {
  std::ofstream out(out_dir / "resolved_config.json", std::ios::trunc);
  out << cfg.resolved.dump(2) << '\n';
}

void write_matrix_csv(const Mat& m, const fs::path& path, char delimiter) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw UsageError("cannot open matrix output: " + path.string());
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out << delimiter;
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

int cmd_obfuscate(const config::RunConfig& cfg, const fs::path& out_dir) {
  const RatingMatrix data = config::load_dataset(cfg);
  const obf::ObfuscatedRatings result =
      obf::obfuscate_ratings(data, cfg.plan, cfg.obfuscate_trust_level);

  write_matrix_csv(result.profile.matrix, out_dir / "obfuscated_matrix.csv",
                   cfg.file_format.delimiter);

  nlohmann::json sidecar;
  sidecar["plan_fingerprint"] = result.profile.plan_fingerprint;
  sidecar["truncated_negative_mass"] = result.profile.truncated_negative_mass;
  sidecar["warnings"] = result.profile.warnings;
  sidecar["subset_layout"] = nlohmann::json::array();
  for (const auto& layout : result.profile.subset_layout)
    sidecar["subset_layout"].push_back(layout.columns);
  sidecar["cluster_assignment"] = result.profile.cluster_assignment;
  sidecar["d_used"] = result.profile.d_used;
  nlohmann::json rated = nlohmann::json::array();
  for (Index u = 0; u < data.n_users(); ++u) rated.push_back(data.rated_items(u));
  sidecar["rated_items"] = rated;
  std::ofstream side(out_dir / "obfuscated_sidecar.json", std::ios::trunc);
  side << sidecar.dump(2) << '\n';

  const Mat original = data.zero_imputed();
  const double dist_err = obf::intra_cluster_distance_error(original, result.profile);
  const double vi = eval::matrix_vi(original, result.profile.matrix, 10, data.range());
  std::cout << "obfuscated " << data.n_users() << "x" << data.n_items()
            << " matrix; mean intra-cluster distance error " << dist_err << ", VI " << vi << "\n";
  return kExitOk;
}

int cmd_simulate(const config::RunConfig& cfg, const fs::path& out_dir) {
  const RatingMatrix data = config::load_dataset(cfg);
  const std::vector<ItemMeta> catalog = config::load_catalog(cfg, data.n_items());

  protocol::SimulationConfig sim = cfg.sim;
  sim.participants = config::resolve_participants(cfg, data);
  if (sim.participants.empty()) throw ConfigError("no eligible participants in the dataset");
  if (cfg.n_superpeers > 0) {
    sim.group_size = static_cast<Index>(
        (sim.participants.size() + static_cast<std::size_t>(cfg.n_superpeers) - 1) /
        static_cast<std::size_t>(cfg.n_superpeers));
  }

  const protocol::SimulationResult result = protocol::run_simulation(data, sim, catalog);
  protocol::write_referrals_csv(result.referrals, out_dir / "referrals.csv");
  result.transcript.write_jsonl(out_dir / "transcript.jsonl", cfg.audit_payloads);

  const protocol::AuditReport audit = protocol::audit_transcript(result.transcript, result.audit);
  nlohmann::json audit_json;
  audit_json["pass"] = audit.pass;
  audit_json["violations"] = audit.violations;
  audit_json["warnings"] = result.warnings;
  std::ofstream audit_out(out_dir / "audit.json", std::ios::trunc);
  audit_out << audit_json.dump(2) << '\n';

  std::cout << "simulation finished: " << result.referrals.size() << " referrals, "
            << result.transcript.messages().size() << " messages, audit "
            << (audit.pass ? "PASS" : "FAIL") << "\n";
  for (const auto& w : result.warnings) std::cout << "  note: " << w << "\n";
  if (result.decode_anomaly) {
    std::cout << "warning: decoded aggregate did not match the fixed-point range; the "
                 "layer-2 ciphertext product does not add inner plaintexts\n";
  }
  return audit.pass ? kExitOk : kExitAuditFailed;
}

int cmd_experiment(const config::RunConfig& cfg, const fs::path& out_dir, const std::string& which) {
  std::vector<eval::ExperimentReport> reports;
  if (which == "fig3" || which == "all") reports.push_back(eval::run_fig3(cfg.fig3));
  if (which == "fig4" || which == "all") reports.push_back(eval::run_fig4(cfg.fig4));
  if (which == "fig56" || which == "all") reports.push_back(eval::run_fig56(cfg.fig56));
  if (which == "fig7" || which == "all") reports.push_back(eval::run_fig7(cfg.fig7));
  if (reports.empty()) throw ConfigError("unknown experiment name: " + which);

  bool all_pass = true;
  for (const auto& report : reports) {
    eval::write_report_csv(report, out_dir / (report.id + ".csv"));
    eval::write_report_summary(report, out_dir / (report.id + "_summary.json"));
    for (const auto& a : report.assertions) {
      const std::string verdict = !a.applicable ? "NOT-APPLICABLE" : (a.pass ? "PASS" : "FAIL");
      std::cout << report.id << ": " << a.name << " " << verdict << " (" << a.statistic << ")\n";
    }
    all_pass = all_pass && report.all_pass();
  }
  return all_pass ? kExitOk : kExitAssertionFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privacy-preserving collaborative-filtering toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed_override;
  app.add_option("--config", config_path, "run configuration (JSON)")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed_override, "override the config seed");

  auto* obfuscate_cmd = app.add_subcommand("obfuscate", "obfuscate a rating matrix");
  auto* simulate_cmd = app.add_subcommand("simulate", "run the recommendation protocol");
  auto* experiment_cmd = app.add_subcommand("experiment", "run an evaluation suite");
  std::string which = "all";
  experiment_cmd->add_option("--which", which, "fig3|fig4|fig56|fig7|all");
  for (auto* cmd : {obfuscate_cmd, simulate_cmd, experiment_cmd}) cmd->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    const config::RunConfig cfg = config::load_run_config(config_path, seed_override);
    fs::create_directories(out_dir);
    write_resolved_config(cfg, out_dir);
    if (obfuscate_cmd->parsed()) return cmd_obfuscate(cfg, out_dir);
    if (simulate_cmd->parsed()) return cmd_simulate(cfg, out_dir);
    if (experiment_cmd->parsed()) return cmd_experiment(cfg, out_dir, which);
    std::cerr << "no command given\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAssertionFailed;
  }
}
