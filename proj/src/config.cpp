#include "privrec/config.hpp"

#include <fstream>
#include <set>

#include "privrec/errors.hpp"
#include "privrec/random.hpp"

namespace privrec::config {

namespace {

void check_keys(const nlohmann::json& obj, const std::string& context,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(context + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + context + "." + it.key() + "'");
  }
}

template <class T>
T get_or(const nlohmann::json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("key '" + key + "' has the wrong type");
  }
}

obf::ObfuscationPlan parse_plan(const nlohmann::json& j, const obf::ObfuscationPlan& defaults,
                                const std::string& context) {
  check_keys(j, context,
             {"subset_width", "sigma", "core_count", "neighbor_count", "trust_intervals",
              "angle_min", "angle_max", "rng_seed"});
  obf::ObfuscationPlan plan = defaults;
  plan.subset_width = get_or<Index>(j, "subset_width", plan.subset_width);
  plan.sigma = get_or<Scalar>(j, "sigma", plan.sigma);
  plan.core_count = get_or<Index>(j, "core_count", plan.core_count);
  plan.neighbor_count = get_or<Index>(j, "neighbor_count", plan.neighbor_count);
  plan.angle_min = get_or<Scalar>(j, "angle_min", plan.angle_min);
  plan.angle_max = get_or<Scalar>(j, "angle_max", plan.angle_max);
  plan.rng_seed = get_or<std::uint64_t>(j, "rng_seed", plan.rng_seed);
  if (j.contains("trust_intervals")) {
    plan.trust_intervals.clear();
    for (const auto& iv : j.at("trust_intervals")) {
      check_keys(iv, context + ".trust_intervals[]", {"lo", "hi", "d"});
      plan.trust_intervals.push_back(
          {iv.at("lo").get<double>(), iv.at("hi").get<double>(), iv.at("d").get<Index>()});
    }
  }
  plan.validate();
  return plan;
}

nlohmann::json plan_to_json(const obf::ObfuscationPlan& plan) {
  nlohmann::json intervals = nlohmann::json::array();
  for (const auto& iv : plan.trust_intervals)
    intervals.push_back({{"lo", iv.lo}, {"hi", iv.hi}, {"d", iv.d}});
  return {{"subset_width", plan.subset_width}, {"sigma", plan.sigma},
          {"core_count", plan.core_count},    {"neighbor_count", plan.neighbor_count},
          {"trust_intervals", intervals},     {"angle_min", plan.angle_min},
          {"angle_max", plan.angle_max},      {"rng_seed", plan.rng_seed}};
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& j) {
  check_keys(j, "config",
             {"seed", "dataset", "plan", "trust", "lsh", "obfuscate", "protocol", "experiments"});
  RunConfig cfg;
  cfg.seed = get_or<std::uint64_t>(j, "seed", 1);

  // --- dataset ---
  const nlohmann::json dataset = j.contains("dataset") ? j.at("dataset") : nlohmann::json::object();
  check_keys(dataset, "dataset",
             {"kind", "path", "delimiter", "sentinel", "rating_min", "rating_max", "item_meta_path",
              "n_users", "n_items", "density", "n_archetypes", "noise_sd", "seed"});
  const std::string kind = get_or<std::string>(dataset, "kind", "synthetic-clustered");
  if (kind == "synthetic-clustered") {
    cfg.dataset_kind = DatasetKind::synthetic_clustered;
  } else if (kind == "synthetic-uniform") {
    cfg.dataset_kind = DatasetKind::synthetic_uniform;
  } else if (kind == "ratings-file") {
    cfg.dataset_kind = DatasetKind::ratings_file;
    if (!dataset.contains("path")) throw ConfigError("dataset.path required for kind ratings-file");
  } else {
    throw ConfigError("dataset.kind must be synthetic-clustered, synthetic-uniform or ratings-file");
  }
  cfg.dataset_path = get_or<std::string>(dataset, "path", "");
  const std::string delim = get_or<std::string>(dataset, "delimiter", ",");
  if (delim.size() != 1) throw ConfigError("dataset.delimiter must be a single character");
  cfg.file_format.delimiter = delim[0];
  cfg.file_format.sentinel = get_or<Scalar>(dataset, "sentinel", 99.0);
  RatingRange range{get_or<Scalar>(dataset, "rating_min", -10.0),
                    get_or<Scalar>(dataset, "rating_max", 10.0)};
  if (!(range.lo < range.hi)) throw ConfigError("dataset rating range is degenerate");
  cfg.file_format.range = range;
  if (dataset.contains("item_meta_path"))
    cfg.item_meta_path = std::filesystem::path(dataset.at("item_meta_path").get<std::string>());

  const std::uint64_t data_seed = get_or<std::uint64_t>(dataset, "seed", mix_seed(cfg.seed, 0xDA7AULL));
  cfg.uniform = UniformSyntheticSpec{get_or<Index>(dataset, "n_users", 200),
                                     get_or<Index>(dataset, "n_items", 60),
                                     get_or<double>(dataset, "density", 0.5), range, data_seed};
  cfg.clustered = ClusteredSyntheticSpec{get_or<Index>(dataset, "n_users", 200),
                                         get_or<Index>(dataset, "n_items", 60),
                                         get_or<Index>(dataset, "n_archetypes", 4),
                                         get_or<double>(dataset, "density", 0.5),
                                         get_or<Scalar>(dataset, "noise_sd", 2.0), range, data_seed};

  // --- plan ---
  obf::ObfuscationPlan plan_defaults;
  plan_defaults.rng_seed = mix_seed(cfg.seed, 0x91a9ULL);
  cfg.plan = j.contains("plan") ? parse_plan(j.at("plan"), plan_defaults, "plan") : plan_defaults;

  // --- trust ---
  const nlohmann::json trust = j.contains("trust") ? j.at("trust") : nlohmann::json::object();
  check_keys(trust, "trust", {"z", "min_shared"});
  cfg.trust_z = get_or<int>(trust, "z", 10);
  cfg.min_shared = get_or<Index>(trust, "min_shared", 2);
  if (cfg.trust_z < 2) throw ConfigError("trust.z must be >= 2");
  if (cfg.min_shared < 1) throw ConfigError("trust.min_shared must be >= 1");

  // --- lsh ---
  const nlohmann::json lsh = j.contains("lsh") ? j.at("lsh") : nlohmann::json::object();
  check_keys(lsh, "lsh", {"seed", "signature_length"});
  cfg.lsh_seed = get_or<std::uint64_t>(lsh, "seed", mix_seed(cfg.seed, 0x15a5ULL));
  cfg.lsh_signature_length = get_or<int>(lsh, "signature_length", 16);
  if (cfg.lsh_signature_length < 16) throw ConfigError("lsh.signature_length must be >= 16");

  // --- obfuscate verb ---
  const nlohmann::json obf_j = j.contains("obfuscate") ? j.at("obfuscate") : nlohmann::json::object();
  check_keys(obf_j, "obfuscate", {"trust_level"});
  cfg.obfuscate_trust_level = get_or<double>(obf_j, "trust_level", 1.0);
  if (cfg.obfuscate_trust_level < 0.0 || cfg.obfuscate_trust_level > 1.0) {
    throw ConfigError("obfuscate.trust_level must lie in [0, 1]");
  }

  // --- protocol verb ---
  const nlohmann::json proto = j.contains("protocol") ? j.at("protocol") : nlohmann::json::object();
  check_keys(proto, "protocol",
             {"target_user", "participants", "participant_count", "participant_rows", "group_size",
              "n_superpeers", "target_key_bits", "mediator_key_bits", "weight_scale",
              "fixed_point_scale", "theta", "acceptance_cutoff", "route", "allow_small_keys",
              "requested_items", "audit_payloads"});
  cfg.sim.target_user = get_or<Index>(proto, "target_user", 0);
  const std::string participants = get_or<std::string>(proto, "participants", "all");
  if (participants == "all") {
    cfg.participant_selection = ParticipantSelection::all_other_users;
  } else if (participants == "first-n") {
    cfg.participant_selection = ParticipantSelection::first_n;
    cfg.participant_count = get_or<Index>(proto, "participant_count", 0);
    if (cfg.participant_count < 1) throw ConfigError("protocol.participant_count must be >= 1");
  } else if (participants == "rows") {
    cfg.participant_selection = ParticipantSelection::explicit_rows;
    cfg.participant_rows = get_or<std::vector<Index>>(proto, "participant_rows", {});
    if (cfg.participant_rows.empty()) throw ConfigError("protocol.participant_rows must not be empty");
  } else {
    throw ConfigError("protocol.participants must be all, first-n or rows");
  }
  cfg.sim.group_size = get_or<Index>(proto, "group_size", 0);
  cfg.n_superpeers = get_or<Index>(proto, "n_superpeers", 0);
  if (cfg.sim.group_size != 0 && cfg.n_superpeers != 0) {
    throw ConfigError("set protocol.group_size or protocol.n_superpeers, not both");
  }
  cfg.sim.target_key_bits = get_or<unsigned>(proto, "target_key_bits", 512);
  cfg.sim.mediator_key_bits =
      get_or<unsigned>(proto, "mediator_key_bits", 2 * cfg.sim.target_key_bits + 2);
  cfg.sim.weight_scale = get_or<std::int64_t>(proto, "weight_scale", 10000);
  cfg.sim.fixed_point_scale = get_or<std::int64_t>(proto, "fixed_point_scale", 1000000);
  cfg.sim.theta = get_or<double>(proto, "theta", 0.0);
  cfg.sim.acceptance_cutoff = get_or<double>(proto, "acceptance_cutoff", 0.0);
  const std::string route = get_or<std::string>(proto, "route", "corrected");
  if (route == "corrected") {
    cfg.sim.route = protocol::AggregationRoute::corrected;
  } else if (route == "paper-literal") {
    cfg.sim.route = protocol::AggregationRoute::paper_literal;
  } else {
    throw ConfigError("protocol.route must be corrected or paper-literal");
  }
  cfg.allow_small_keys = get_or<bool>(proto, "allow_small_keys", false);
  cfg.audit_payloads = get_or<bool>(proto, "audit_payloads", true);
  if (!cfg.allow_small_keys && cfg.sim.target_key_bits < 512) {
    throw ConfigError("protocol.target_key_bits below 512 requires allow_small_keys");
  }
  if (proto.contains("requested_items"))
    cfg.sim.requested_items = proto.at("requested_items").get<std::vector<Index>>();
  if (cfg.sim.theta < 0.0 || cfg.sim.theta > 1.0) throw ConfigError("protocol.theta must lie in [0, 1]");
  cfg.sim.plan = cfg.plan;
  cfg.sim.trust_z = cfg.trust_z;
  cfg.sim.min_shared = cfg.min_shared;
  cfg.sim.lsh_seed = cfg.lsh_seed;
  cfg.sim.lsh_signature_length = cfg.lsh_signature_length;
  cfg.sim.protocol_seed = mix_seed(cfg.seed, 0x9207ULL);

  // --- experiments ---
  const nlohmann::json ex = j.contains("experiments") ? j.at("experiments") : nlohmann::json::object();
  check_keys(ex, "experiments", {"fig3", "fig4", "fig56", "fig7"});
  cfg.fig3.seed = mix_seed(cfg.seed, 3);
  cfg.fig4.seed = mix_seed(cfg.seed, 4);
  cfg.fig56.seed = mix_seed(cfg.seed, 56);
  cfg.fig7.seed = mix_seed(cfg.seed, 7);
  if (ex.contains("fig3")) {
    const auto& f = ex.at("fig3");
    check_keys(f, "experiments.fig3", {"key_bits", "record_count", "repetitions"});
    cfg.fig3.key_bits = get_or<std::vector<unsigned>>(f, "key_bits", cfg.fig3.key_bits);
    cfg.fig3.record_count = get_or<int>(f, "record_count", cfg.fig3.record_count);
    cfg.fig3.repetitions = get_or<int>(f, "repetitions", cfg.fig3.repetitions);
  }
  if (ex.contains("fig4")) {
    const auto& f = ex.at("fig4");
    check_keys(f, "experiments.fig4", {"record_counts", "key_bits", "repetitions"});
    cfg.fig4.record_counts = get_or<std::vector<int>>(f, "record_counts", cfg.fig4.record_counts);
    cfg.fig4.key_bits = get_or<unsigned>(f, "key_bits", cfg.fig4.key_bits);
    cfg.fig4.repetitions = get_or<int>(f, "repetitions", cfg.fig4.repetitions);
  }
  if (ex.contains("fig56")) {
    const auto& f = ex.at("fig56");
    check_keys(f, "experiments.fig56",
               {"d_sweep", "theta", "trust_z", "vi_bins", "n_users", "n_items", "density",
                "n_archetypes", "noise_sd", "train_fraction", "holdout_per_user", "plan"});
    cfg.fig56.d_sweep = get_or<std::vector<Index>>(f, "d_sweep", cfg.fig56.d_sweep);
    cfg.fig56.theta = get_or<double>(f, "theta", cfg.fig56.theta);
    cfg.fig56.trust_z = get_or<int>(f, "trust_z", cfg.fig56.trust_z);
    cfg.fig56.vi_bins = get_or<int>(f, "vi_bins", cfg.fig56.vi_bins);
    cfg.fig56.dataset.n_users = get_or<Index>(f, "n_users", cfg.fig56.dataset.n_users);
    cfg.fig56.dataset.n_items = get_or<Index>(f, "n_items", cfg.fig56.dataset.n_items);
    cfg.fig56.dataset.density = get_or<double>(f, "density", cfg.fig56.dataset.density);
    cfg.fig56.dataset.n_archetypes = get_or<Index>(f, "n_archetypes", cfg.fig56.dataset.n_archetypes);
    cfg.fig56.dataset.noise_sd = get_or<Scalar>(f, "noise_sd", cfg.fig56.dataset.noise_sd);
    cfg.fig56.split.train_fraction = get_or<double>(f, "train_fraction", cfg.fig56.split.train_fraction);
    cfg.fig56.split.holdout_per_user = get_or<Index>(f, "holdout_per_user", cfg.fig56.split.holdout_per_user);
    if (f.contains("plan")) cfg.fig56.plan = parse_plan(f.at("plan"), cfg.fig56.plan, "experiments.fig56.plan");
  }
  cfg.fig56.min_shared = cfg.min_shared;
  cfg.fig56.dataset.range = range;
  cfg.fig56.split.rng_seed = mix_seed(cfg.seed, 0x5611ULL);
  cfg.fig56.dataset.seed = mix_seed(cfg.seed, 0x56DAULL);
  cfg.fig56.plan.rng_seed = mix_seed(cfg.seed, 0x56F1ULL);
  if (ex.contains("fig7")) {
    const auto& f = ex.at("fig7");
    check_keys(f, "experiments.fig7",
               {"fractions", "holdout", "n_superpeers", "target_user", "n_users", "n_items",
                "density", "n_archetypes", "noise_sd", "theta"});
    cfg.fig7.fractions = get_or<std::vector<double>>(f, "fractions", cfg.fig7.fractions);
    cfg.fig7.holdout = get_or<Index>(f, "holdout", cfg.fig7.holdout);
    cfg.fig7.n_superpeers = get_or<Index>(f, "n_superpeers", cfg.fig7.n_superpeers);
    cfg.fig7.target_user = get_or<Index>(f, "target_user", cfg.fig7.target_user);
    cfg.fig7.dataset.n_users = get_or<Index>(f, "n_users", cfg.fig7.dataset.n_users);
    cfg.fig7.dataset.n_items = get_or<Index>(f, "n_items", cfg.fig7.dataset.n_items);
    cfg.fig7.dataset.density = get_or<double>(f, "density", cfg.fig7.dataset.density);
    cfg.fig7.dataset.n_archetypes = get_or<Index>(f, "n_archetypes", cfg.fig7.dataset.n_archetypes);
    cfg.fig7.dataset.noise_sd = get_or<Scalar>(f, "noise_sd", cfg.fig7.dataset.noise_sd);
    cfg.fig7.protocol.theta = get_or<double>(f, "theta", cfg.fig7.protocol.theta);
  }
  cfg.fig7.dataset.range = range;
  cfg.fig7.dataset.seed = mix_seed(cfg.seed, 0x7DAULL);
  cfg.fig7.protocol.trust_z = cfg.trust_z;
  cfg.fig7.protocol.min_shared = cfg.min_shared;

  // --- resolved echo ---
  nlohmann::json resolved;
  resolved["seed"] = cfg.seed;
  resolved["dataset"] = {{"kind", kind},
                         {"delimiter", delim},
                         {"sentinel", cfg.file_format.sentinel},
                         {"rating_min", range.lo},
                         {"rating_max", range.hi},
                         {"n_users", cfg.clustered.n_users},
                         {"n_items", cfg.clustered.n_items},
                         {"density", cfg.clustered.density},
                         {"n_archetypes", cfg.clustered.n_archetypes},
                         {"noise_sd", cfg.clustered.noise_sd},
                         {"seed", data_seed}};
  if (!cfg.dataset_path.empty()) resolved["dataset"]["path"] = cfg.dataset_path.string();
  if (cfg.item_meta_path) resolved["dataset"]["item_meta_path"] = cfg.item_meta_path->string();
  resolved["plan"] = plan_to_json(cfg.plan);
  resolved["trust"] = {{"z", cfg.trust_z}, {"min_shared", cfg.min_shared}};
  resolved["lsh"] = {{"seed", cfg.lsh_seed}, {"signature_length", cfg.lsh_signature_length}};
  resolved["obfuscate"] = {{"trust_level", cfg.obfuscate_trust_level}};
  resolved["protocol"] = {{"target_user", cfg.sim.target_user},
                          {"participants", participants},
                          {"group_size", cfg.sim.group_size},
                          {"n_superpeers", cfg.n_superpeers},
                          {"target_key_bits", cfg.sim.target_key_bits},
                          {"mediator_key_bits", cfg.sim.mediator_key_bits},
                          {"weight_scale", cfg.sim.weight_scale},
                          {"fixed_point_scale", cfg.sim.fixed_point_scale},
                          {"theta", cfg.sim.theta},
                          {"acceptance_cutoff", cfg.sim.acceptance_cutoff},
                          {"route", route},
                          {"allow_small_keys", cfg.allow_small_keys},
                          {"audit_payloads", cfg.audit_payloads}};
  if (cfg.participant_selection == ParticipantSelection::first_n)
    resolved["protocol"]["participant_count"] = cfg.participant_count;
  if (cfg.participant_selection == ParticipantSelection::explicit_rows)
    resolved["protocol"]["participant_rows"] = cfg.participant_rows;
  if (cfg.sim.requested_items) resolved["protocol"]["requested_items"] = *cfg.sim.requested_items;
  resolved["experiments"] = ex;
  cfg.resolved = resolved;
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path,
                          std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON: " + path.string());
  if (seed_override) j["seed"] = *seed_override;
  return parse_run_config(j);
}

RatingMatrix load_dataset(const RunConfig& cfg) {
  switch (cfg.dataset_kind) {
    case DatasetKind::synthetic_clustered: return synthesize_clustered(cfg.clustered);
    case DatasetKind::synthetic_uniform: return synthesize_uniform(cfg.uniform);
    case DatasetKind::ratings_file: return load_ratings(cfg.dataset_path, cfg.file_format);
  }
  throw ConfigError("unknown dataset kind");
}

std::vector<ItemMeta> load_catalog(const RunConfig& cfg, Index n_items) {
  if (!cfg.item_meta_path) return default_catalog(n_items);
  std::vector<ItemMeta> catalog = load_item_meta(*cfg.item_meta_path);
  if (static_cast<Index>(catalog.size()) < n_items) {
    throw ConfigError("item meta file holds fewer items than the dataset");
  }
  return catalog;
}

std::vector<Index> resolve_participants(const RunConfig& cfg, const RatingMatrix& data) {
  std::vector<Index> rows;
  switch (cfg.participant_selection) {
    case ParticipantSelection::all_other_users:
      for (Index u = 0; u < data.n_users(); ++u)
        if (u != cfg.sim.target_user && data.rated_count(u) > 0) rows.push_back(u);
      break;
    case ParticipantSelection::first_n:
      for (Index u = 0; u < data.n_users() && static_cast<Index>(rows.size()) < cfg.participant_count; ++u)
        if (u != cfg.sim.target_user && data.rated_count(u) > 0) rows.push_back(u);
      break;
    case ParticipantSelection::explicit_rows:
      rows = cfg.participant_rows;
      break;
  }
  return rows;
}

}  // namespace privrec::config
