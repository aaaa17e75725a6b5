#include "privrec/protocol.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "privrec/errors.hpp"
#include "privrec/eval.hpp"

namespace privrec::protocol {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Pseudonym fresh_pseudonym(Randomness& rng, std::set<Pseudonym>& used) {
  while (true) {
    Pseudonym p = hex16(rng.next_u64());
    if (used.insert(p).second) return p;
  }
}

}  // namespace

std::string to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::RecommendationRequest: return "RecommendationRequest";
    case MessageKind::TrustReport: return "TrustReport";
    case MessageKind::ObfuscatedShare: return "ObfuscatedShare";
    case MessageKind::KeyAnnounce: return "KeyAnnounce";
    case MessageKind::EncryptedAggregate: return "EncryptedAggregate";
    case MessageKind::ReferralList: return "ReferralList";
    case MessageKind::ReputationReport: return "ReputationReport";
  }
  throw UsageError("unknown message kind");
}

const Message& Transcript::post(MessageKind kind, const Pseudonym& sender,
                                const Pseudonym& receiver, nlohmann::json payload) {
  Message msg;
  msg.seq = messages_.size();
  msg.kind = kind;
  msg.sender = sender;
  msg.receiver = receiver;
  msg.payload = std::move(payload);
  messages_.push_back(std::move(msg));
  return messages_.back();
}

std::string Transcript::to_jsonl(bool include_payload) const {
  std::ostringstream out;
  for (const auto& msg : messages_) {
    nlohmann::json line;
    line["seq"] = msg.seq;
    line["kind"] = to_string(msg.kind);
    line["sender"] = msg.sender;
    line["receiver"] = msg.receiver;
    line["digest"] = hex16(fnv1a(msg.payload.dump()));
    if (include_payload) line["payload"] = msg.payload;
    out << line.dump() << '\n';
  }
  return out.str();
}

void Transcript::write_jsonl(const std::filesystem::path& path, bool include_payload) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw UsageError("cannot open transcript output: " + path.string());
  out << to_jsonl(include_payload);
}

std::vector<Group> form_groups(const std::vector<Pseudonym>& participants, Index group_size,
                               const ReputationRegistry& registry, Randomness& rng) {
  if (participants.empty()) throw UsageError("cannot form groups without participants");
  if (group_size < 1) throw UsageError("group_size must be >= 1");
  std::vector<Pseudonym> shuffled = participants;
  rng.shuffle(shuffled);

  std::vector<Group> groups;
  for (std::size_t start = 0; start < shuffled.size(); start += static_cast<std::size_t>(group_size)) {
    Group g;
    const std::size_t end = std::min(shuffled.size(), start + static_cast<std::size_t>(group_size));
    g.members.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(start),
                     shuffled.begin() + static_cast<std::ptrdiff_t>(end));
    g.super_peer = *std::min_element(g.members.begin(), g.members.end(),
                                     [&](const Pseudonym& a, const Pseudonym& b) {
                                       const double ra = registry.score(a), rb = registry.score(b);
                                       if (ra != rb) return ra > rb;
                                       return a < b;
                                     });
    groups.push_back(std::move(g));
  }
  return groups;
}

// ---------------------------------------------------------------------------
// Privacy audit
// ---------------------------------------------------------------------------

namespace {

/// Structural envelope integers that legitimately take small values.
bool audit_exempt_key(const std::string& key) {
  return key == "layer" || key == "key_bits";
}

void scan_json(const nlohmann::json& node, const std::set<std::string>& needles,
               const std::string& where, std::vector<std::string>& hits) {
  if (node.is_object()) {
    for (auto it = node.begin(); it != node.end(); ++it) {
      if (audit_exempt_key(it.key())) continue;
      scan_json(it.value(), needles, where + "." + it.key(), hits);
    }
  } else if (node.is_array()) {
    std::size_t i = 0;
    for (const auto& element : node) scan_json(element, needles, where + "[" + std::to_string(i++) + "]", hits);
  } else if (node.is_string()) {
    if (needles.count(node.get<std::string>())) hits.push_back(where);
  } else if (node.is_number_integer() || node.is_number_unsigned()) {
    if (needles.count(node.dump())) hits.push_back(where);
  }
}

}  // namespace

AuditReport audit_transcript(const Transcript& transcript, const AuditContext& context) {
  AuditReport report;
  for (const auto& msg : transcript.messages()) {
    const std::string label = "seq " + std::to_string(msg.seq) + " (" + to_string(msg.kind) + ")";
    std::vector<std::string> hits;
    scan_json(msg.payload, context.secret_values, label, hits);
    for (const auto& h : hits) report.violations.push_back("secret key material at " + h);

    const bool readable_by_curious_party =
        msg.sender == context.prs || msg.receiver == context.prs ||
        msg.sender == context.mediator || msg.receiver == context.mediator;
    if (readable_by_curious_party) {
      hits.clear();
      scan_json(msg.payload, context.rating_encodings, label, hits);
      for (const auto& h : hits) report.violations.push_back("rating encoding at " + h);
    }
  }
  report.pass = report.violations.empty();
  return report;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

namespace {

struct ShareEntry {
  std::string signature;
  Pseudonym pseudonym;
  double trust = 0.0;
  double value = 0.0;  // mean-centred obfuscated rating, in the clear at the super-peer
};

struct EncryptedEntry {
  Pseudonym pseudonym;
  double trust = 0.0;
  paillier::Ciphertext outer;  // layer 2
  paillier::Ciphertext inner;  // layer 1, filled after the strip exchange
  bool inner_ready = false;
};

nlohmann::json signature_json(const std::string& sig) { return sig; }

}  // namespace

SimulationResult run_simulation(const RatingMatrix& data, const SimulationConfig& cfg,
                                const std::vector<ItemMeta>& catalog) {
  // --- validation before any message flows ---
  if (cfg.target_user < 0 || cfg.target_user >= data.n_users()) throw ConfigError("target_user out of range");
  if (cfg.participants.empty()) throw ConfigError("no participants configured");
  for (Index p : cfg.participants) {
    if (p < 0 || p >= data.n_users()) throw ConfigError("participant row out of range");
    if (p == cfg.target_user) throw ConfigError("target cannot participate in its own request");
  }
  if (cfg.mediator_key_bits < 2 * cfg.target_key_bits + 2) {
    throw ConfigError("mediator key too small: needs >= 2 * target key bits + 2");
  }
  if (cfg.weight_scale < 1 || cfg.fixed_point_scale < 1) {
    throw ConfigError("weight_scale and fixed_point_scale must be positive");
  }
  cfg.plan.validate();
  if (!catalog.empty() && static_cast<Index>(catalog.size()) < data.n_items()) {
    throw ConfigError("catalog smaller than the item count");
  }

  SimulationResult result;
  Randomness rng(cfg.protocol_seed);

  // --- identities ---
  std::set<Pseudonym> used;
  result.target_pseudonym = fresh_pseudonym(rng, used);
  result.mediator_pseudonym = fresh_pseudonym(rng, used);
  result.prs_pseudonym = fresh_pseudonym(rng, used);
  result.registry_pseudonym = fresh_pseudonym(rng, used);
  std::vector<Pseudonym> participant_ids;
  for (Index row : cfg.participants) {
    Pseudonym p = fresh_pseudonym(rng, used);
    participant_ids.push_back(p);
    result.user_by_pseudonym[p] = row;
  }

  // --- catalog signatures ---
  result.scheme = lsh::make_scheme(cfg.lsh_seed, cfg.lsh_signature_length);
  std::vector<std::string> signature_of_item(static_cast<std::size_t>(data.n_items()));
  for (Index i = 0; i < data.n_items(); ++i) {
    const ItemMeta& meta = catalog.empty() ? default_item_meta(i) : catalog[static_cast<std::size_t>(i)];
    const std::string sig = lsh::serialize(lsh::hash_item(meta, result.scheme));
    signature_of_item[static_cast<std::size_t>(i)] = sig;
    result.item_by_signature[sig] = i;
  }
  if (result.item_by_signature.size() != static_cast<std::size_t>(data.n_items())) {
    throw ConfigError("item signature collision in catalog");
  }

  // --- participant pool statistics (clear item means, the public context) ---
  RatingMatrix pool(static_cast<Index>(cfg.participants.size()), data.n_items(), data.range());
  for (std::size_t r = 0; r < cfg.participants.size(); ++r)
    for (Index i = 0; i < data.n_items(); ++i)
      if (data.is_rated(cfg.participants[r], i))
        pool.set(static_cast<Index>(r), i, data.rating(cfg.participants[r], i));
  result.item_means = item_means_or_nan(pool);

  // --- requested items ---
  std::vector<Index> requested;
  if (cfg.requested_items) {
    requested = *cfg.requested_items;
    for (Index q : requested)
      if (q < 0 || q >= data.n_items()) throw ConfigError("requested item out of range");
  } else {
    for (Index i = 0; i < data.n_items(); ++i)
      if (!data.is_rated(cfg.target_user, i)) requested.push_back(i);
  }

  // --- keys ---
  paillier::KeyPair target_keys = paillier::keygen(cfg.target_key_bits, rng);
  paillier::KeyPair mediator_keys = paillier::keygen(cfg.mediator_key_bits, rng);
  const paillier::FixedPointCodec codec{cfg.fixed_point_scale, target_keys.pub.n};
  const paillier::FixedPointCodec codec_outer{cfg.fixed_point_scale, mediator_keys.pub.n};

  result.audit.prs = result.prs_pseudonym;
  result.audit.mediator = result.mediator_pseudonym;
  for (const auto& k : {target_keys.sec.lambda, target_keys.sec.mu, mediator_keys.sec.lambda,
                        mediator_keys.sec.mu}) {
    result.audit.secret_values.insert(k.get_str(10));
    result.audit.secret_values.insert(k.get_str(16));
  }
  auto forbid_value = [&](Scalar v) {
    for (const auto* c : {&codec, &codec_outer}) {
      const paillier::BigInt enc = c->encode(v);
      result.audit.rating_encodings.insert(enc.get_str(10));
      result.audit.rating_encodings.insert(enc.get_str(16));
    }
  };
  for (Index i = 0; i < data.n_items(); ++i) {
    if (data.is_rated(cfg.target_user, i)) forbid_value(data.rating(cfg.target_user, i));
    for (Index row : cfg.participants)
      if (data.is_rated(row, i)) forbid_value(data.rating(row, i));
  }

  // --- reputation registry with seeded prior scores ---
  for (const auto& p : participant_ids) result.registry.set_score(p, rng.uniform(0.0, 1.0));

  const Index group_size =
      cfg.group_size >= 1 ? cfg.group_size : static_cast<Index>(participant_ids.size());
  const std::vector<Group> groups = form_groups(participant_ids, group_size, result.registry, rng);
  for (const auto& g : groups) result.superpeers.push_back(g.super_peer);

  Transcript& bus = result.transcript;

  // === preparation phase ===
  const nlohmann::json mpk_json = paillier::to_json(mediator_keys.pub);
  bus.post(MessageKind::KeyAnnounce, result.mediator_pseudonym, result.target_pseudonym,
           {{"key", "outer"}, {"public_key", mpk_json}});
  for (const auto& g : groups)
    bus.post(MessageKind::KeyAnnounce, result.mediator_pseudonym, g.super_peer,
             {{"key", "outer"}, {"public_key", mpk_json}});
  bus.post(MessageKind::KeyAnnounce, result.mediator_pseudonym, result.prs_pseudonym,
           {{"key", "outer"}, {"public_key", mpk_json}});

  // Target key travels to the mediator under the mediator key.
  paillier::Ciphertext tpk_ct = paillier::encrypt(mediator_keys.pub, target_keys.pub.n, rng);
  bus.post(MessageKind::KeyAnnounce, result.target_pseudonym, result.mediator_pseudonym,
           {{"key", "inner-wrapped"}, {"ciphertext", paillier::to_json(tpk_ct)}});
  const paillier::BigInt tpk_n = paillier::decrypt(mediator_keys.sec, tpk_ct);
  if (tpk_n != target_keys.pub.n) throw CorruptionError("target key corrupted in transit");
  const nlohmann::json tpk_json = paillier::to_json(target_keys.pub);
  for (const auto& g : groups)
    bus.post(MessageKind::KeyAnnounce, result.mediator_pseudonym, g.super_peer,
             {{"key", "inner"}, {"public_key", tpk_json}});
  bus.post(MessageKind::KeyAnnounce, result.mediator_pseudonym, result.prs_pseudonym,
           {{"key", "inner"}, {"public_key", tpk_json}});

  // Target's doubly encrypted mean rating goes straight to the PRS.
  std::vector<std::pair<Index, Scalar>> target_profile;
  for (Index i : data.rated_items(cfg.target_user)) target_profile.emplace_back(i, data.rating(cfg.target_user, i));
  if (target_profile.empty()) throw ConfigError("target has no rated items");
  const double target_mean = eval::mean_of(target_profile);
  forbid_value(target_mean);
  paillier::Ciphertext target_mean_ct =
      paillier::double_encrypt(mediator_keys.pub, target_keys.pub, codec.encode(target_mean), rng);
  bus.post(MessageKind::EncryptedAggregate, result.target_pseudonym, result.prs_pseudonym,
           {{"target_mean_ciphertext", paillier::to_json(target_mean_ct)}});

  // === request: target sanitizes its own profile and broadcasts ===
  obf::ObfuscationPlan target_plan = cfg.plan;
  target_plan.rng_seed = mix_seed(cfg.plan.rng_seed, static_cast<std::uint64_t>(cfg.target_user));
  Mat target_row(1, data.n_items());
  target_row.setZero();
  for (const auto& [i, v] : target_profile) target_row(0, i) = v;
  const obf::ObfuscatedProfile target_obf = obf::obfuscate(target_row, target_plan, 1.0);

  nlohmann::json shared_json = nlohmann::json::array();
  std::set<std::string> target_rated_signatures;
  for (const auto& [i, v] : target_profile) {
    const std::string& sig = signature_of_item[static_cast<std::size_t>(i)];
    shared_json.push_back({{"signature", signature_json(sig)}, {"value", target_obf.matrix(0, i)}});
    target_rated_signatures.insert(sig);
  }
  nlohmann::json requested_json = nlohmann::json::array();
  for (Index q : requested) requested_json.push_back(signature_of_item[static_cast<std::size_t>(q)]);
  const nlohmann::json request_payload = {{"requested", requested_json},
                                          {"shared", shared_json},
                                          {"theta", cfg.theta},
                                          {"trust_z", cfg.trust_z},
                                          {"min_shared", cfg.min_shared}};
  for (const auto& p : participant_ids)
    bus.post(MessageKind::RecommendationRequest, result.target_pseudonym, p, request_payload);

  // === encryption phase: participants respond to their super-peer ===
  std::map<Pseudonym, Pseudonym> superpeer_of;
  for (const auto& g : groups)
    for (const auto& m : g.members) superpeer_of[m] = g.super_peer;

  std::map<Pseudonym, std::vector<ShareEntry>> shares_at_superpeer;
  for (std::size_t pi = 0; pi < participant_ids.size(); ++pi) {
    const Pseudonym& who = participant_ids[pi];
    const Index row = cfg.participants[pi];

    std::vector<Index> rated_requested;
    for (Index q : requested)
      if (data.is_rated(row, q)) rated_requested.push_back(q);
    if (rated_requested.empty()) {
      result.warnings.push_back("participant " + who + " abstained: no requested item rated");
      ++result.n_abstained;
      continue;
    }

    // Co-rated values: target's obfuscated shared ratings against the
    // participant's own clear ratings, matched by exact signature.
    std::vector<Scalar> target_vals, own_vals;
    for (const auto& [i, v] : target_profile) {
      if (data.is_rated(row, i)) {
        target_vals.push_back(target_obf.matrix(0, i));
        own_vals.push_back(data.rating(row, i));
      }
    }
    if (static_cast<Index>(target_vals.size()) < cfg.min_shared) {
      result.warnings.push_back("participant " + who + " abstained: insufficient overlap");
      ++result.n_abstained;
      continue;
    }
    double trust_value;
    try {
      trust_value =
          trust::compute_trust(target_vals, own_vals, cfg.trust_z, data.range(), cfg.min_shared).value;
    } catch (const UndefinedTrustError&) {
      trust_value = trust::degenerate_trust(target_vals, own_vals, cfg.trust_z, data.range());
    }
    result.trust_by_pseudonym[who] = trust_value;

    obf::ObfuscationPlan plan = cfg.plan;
    plan.rng_seed = mix_seed(cfg.plan.rng_seed, static_cast<std::uint64_t>(row));
    Mat profile_row(1, data.n_items());
    profile_row.setZero();
    for (Index i = 0; i < data.n_items(); ++i)
      if (data.is_rated(row, i)) profile_row(0, i) = data.rating(row, i);
    const obf::ObfuscatedProfile obf_profile = obf::obfuscate(profile_row, plan, trust_value);

    const Pseudonym& sp = superpeer_of.at(who);
    bus.post(MessageKind::TrustReport, who, sp,
             {{"trust", trust_value}, {"n_shared", static_cast<Index>(target_vals.size())}});

    nlohmann::json shares_json = nlohmann::json::array();
    for (Index q : rated_requested) {
      const double mean_q = result.item_means(q);
      const double centred = obf_profile.matrix(0, q) - mean_q;
      const std::string& sig = signature_of_item[static_cast<std::size_t>(q)];
      shares_at_superpeer[sp].push_back(ShareEntry{sig, who, trust_value, centred});
      shares_json.push_back({{"signature", signature_json(sig)}, {"value", centred}});
      forbid_value(centred);
    }
    bus.post(MessageKind::ObfuscatedShare, who, sp,
             {{"shares", shares_json}, {"trust", trust_value}});
  }

  // === super-peers filter, group, doubly encrypt, and forward ===
  std::map<std::string, std::vector<EncryptedEntry>> entries_by_signature;
  for (const auto& g : groups) {
    const auto it = shares_at_superpeer.find(g.super_peer);
    nlohmann::json items_json = nlohmann::json::array();
    std::map<std::string, std::vector<EncryptedEntry>> local;
    if (it != shares_at_superpeer.end()) {
      for (const auto& share : it->second) {
        if (!(share.trust > cfg.theta)) continue;  // strict threshold
        EncryptedEntry entry;
        entry.pseudonym = share.pseudonym;
        entry.trust = share.trust;
        entry.outer = paillier::double_encrypt(mediator_keys.pub, target_keys.pub,
                                               codec.encode(share.value), rng);
        local[share.signature].push_back(std::move(entry));
      }
    }
    if (local.empty()) {
      result.warnings.push_back("super-peer " + g.super_peer + ": empty aggregate after trust filter");
    }
    for (auto& [sig, list] : local) {
      nlohmann::json entries_json = nlohmann::json::array();
      for (const auto& e : list)
        entries_json.push_back({{"pseudonym", e.pseudonym},
                                {"trust", e.trust},
                                {"ciphertext", paillier::to_json(e.outer)}});
      items_json.push_back({{"signature", signature_json(sig)}, {"entries", entries_json}});
      auto& sink = entries_by_signature[sig];
      for (auto& e : list) sink.push_back(std::move(e));
    }
    bus.post(MessageKind::EncryptedAggregate, g.super_peer, result.prs_pseudonym,
             {{"items", items_json}});
  }

  for (const auto& [sig, list] : entries_by_signature) {
    auto& names = result.contributors_by_signature[sig];
    for (const auto& e : list) names.push_back(e.pseudonym);
  }

  // === ingress strip (corrected route): the mediator removes the outer
  // layer of every share, seeing only inner ciphertexts ===
  paillier::Ciphertext target_mean_inner;
  if (cfg.route == AggregationRoute::corrected) {
    nlohmann::json strip_request = nlohmann::json::array();
    strip_request.push_back(paillier::to_json(target_mean_ct));
    for (const auto& [sig, list] : entries_by_signature)
      for (const auto& e : list) strip_request.push_back(paillier::to_json(e.outer));
    bus.post(MessageKind::EncryptedAggregate, result.prs_pseudonym, result.mediator_pseudonym,
             {{"ciphertexts", strip_request}});

    nlohmann::json strip_response = nlohmann::json::array();
    target_mean_inner = paillier::strip_layer(mediator_keys.sec, target_keys.pub, target_mean_ct);
    strip_response.push_back(paillier::to_json(target_mean_inner));
    for (auto& [sig, list] : entries_by_signature) {
      for (auto& e : list) {
        e.inner = paillier::strip_layer(mediator_keys.sec, target_keys.pub, e.outer);
        e.inner_ready = true;
        strip_response.push_back(paillier::to_json(e.inner));
      }
    }
    bus.post(MessageKind::EncryptedAggregate, result.mediator_pseudonym, result.prs_pseudonym,
             {{"ciphertexts", strip_response}});
  }

  // === recommendation phase: homomorphic weighted sums at the PRS ===
  struct PredictionCt {
    std::string signature;
    paillier::Ciphertext ct;
  };
  std::vector<PredictionCt> predictions;
  for (const auto& [sig, list] : entries_by_signature) {
    if (list.empty()) continue;
    if (cfg.route == AggregationRoute::corrected) {
      double trust_sum = 0.0;
      for (const auto& e : list) trust_sum += e.trust;
      std::vector<long> weights;
      bool any_nonzero = false;
      for (const auto& e : list) {
        const long w = std::lround(static_cast<double>(cfg.weight_scale) * e.trust / trust_sum);
        weights.push_back(w);
        any_nonzero = any_nonzero || w > 0;
      }
      if (!any_nonzero) throw ConfigError("weight_scale too small: all weights rounded to zero");

      paillier::Ciphertext acc = paillier::hom_scalar_mul(
          target_keys.pub, target_mean_inner, paillier::BigInt(static_cast<long>(cfg.weight_scale)));
      for (std::size_t j = 0; j < list.size(); ++j) {
        if (weights[j] == 0) continue;
        acc = paillier::hom_add(
            target_keys.pub, acc,
            paillier::hom_scalar_mul(target_keys.pub, list[j].inner, paillier::BigInt(weights[j])));
      }
      acc = paillier::reblind(target_keys.pub, acc, rng);
      predictions.push_back({sig, acc});
    } else {
      // Literal route: the plain layer-2 ciphertext product. The outer
      // homomorphism adds inner ciphertext values, not inner plaintexts,
      // so the decoded result is not the weighted sum; kept to document
      // exactly that.
      paillier::Ciphertext acc = target_mean_ct;
      for (const auto& e : list) acc = paillier::hom_add(mediator_keys.pub, acc, e.outer);
      acc = paillier::reblind(mediator_keys.pub, acc, rng);
      predictions.push_back({sig, acc});
    }
  }
  for (Index q : requested) {
    const std::string& sig = signature_of_item[static_cast<std::size_t>(q)];
    if (!entries_by_signature.count(sig)) {
      result.warnings.push_back("item " + sig + " skipped: no shares after filtering");
    }
  }

  // === delivery: PRS -> mediator -> target ===
  nlohmann::json referral_json = nlohmann::json::array();
  for (const auto& p : predictions)
    referral_json.push_back({{"signature", signature_json(p.signature)},
                             {"ciphertext", paillier::to_json(p.ct)}});
  bus.post(MessageKind::ReferralList, result.prs_pseudonym, result.mediator_pseudonym,
           {{"items", referral_json}});

  std::vector<PredictionCt> delivered;
  if (cfg.route == AggregationRoute::corrected) {
    // Outer layer already stripped on ingress; the mediator is a pure
    // forwarding hop for unlinkability.
    delivered = predictions;
    bus.post(MessageKind::ReferralList, result.mediator_pseudonym, result.target_pseudonym,
             {{"items", referral_json}});
  } else {
    nlohmann::json forwarded = nlohmann::json::array();
    for (const auto& p : predictions) {
      paillier::Ciphertext once;
      once.value = paillier::decrypt(mediator_keys.sec, p.ct);
      once.key_id = target_keys.pub.key_id;
      once.layer = 1;
      delivered.push_back({p.signature, once});
      forwarded.push_back({{"signature", signature_json(p.signature)},
                           {"ciphertext", paillier::to_json(once)}});
    }
    bus.post(MessageKind::ReferralList, result.mediator_pseudonym, result.target_pseudonym,
             {{"items", forwarded}});
  }

  const double sanity_bound =
      10.0 * std::max(std::abs(data.range().lo), std::abs(data.range().hi));
  for (const auto& p : delivered) {
    double predicted = 0.0;
    bool ok = true;
    try {
      const paillier::BigInt value = paillier::decrypt(target_keys.sec, p.ct);
      predicted = codec.decode(value) / static_cast<double>(cfg.weight_scale);
      if (!std::isfinite(predicted) || std::abs(predicted) > sanity_bound) ok = false;
    } catch (const Error&) {
      ok = false;
    }
    if (!ok) {
      result.decode_anomaly = true;
      result.warnings.push_back("corruption: decoded prediction out of fixed-point range for item " +
                                p.signature);
      continue;
    }
    result.prediction_by_signature[p.signature] = predicted;
  }

  for (const auto& [sig, value] : result.prediction_by_signature) {
    if (target_rated_signatures.count(sig)) continue;  // already consumed
    if (value < cfg.acceptance_cutoff) continue;
    result.referrals.push_back(Referral{sig, value, 0});
  }
  std::stable_sort(result.referrals.begin(), result.referrals.end(),
                   [](const Referral& a, const Referral& b) {
                     if (a.predicted != b.predicted) return a.predicted > b.predicted;
                     return a.item_signature < b.item_signature;
                   });
  for (std::size_t i = 0; i < result.referrals.size(); ++i)
    result.referrals[i].rank = static_cast<Index>(i) + 1;

  // === reputation reports close the run ===
  for (const auto& g : groups) {
    for (const auto& m : g.members) {
      bus.post(MessageKind::ReputationReport, m, result.registry_pseudonym,
               {{"superpeer", g.super_peer}, {"outcome", "success"}});
      result.registry.report_success(g.super_peer);
    }
  }
  return result;
}

void write_referrals_csv(const std::vector<Referral>& referrals,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw UsageError("cannot open referrals output: " + path.string());
  out << "item_signature,predicted_rating,rank\n";
  for (const auto& r : referrals)
    out << r.item_signature << ',' << format_double(r.predicted) << ',' << r.rank << '\n';
}

}  // namespace privrec::protocol
