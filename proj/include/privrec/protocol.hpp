#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "privrec/lsh.hpp"
#include "privrec/obfuscation.hpp"
#include "privrec/paillier.hpp"
#include "privrec/rating_matrix.hpp"
#include "privrec/trust.hpp"

namespace privrec::protocol {

/// Fixed-width random token. The mapping to dataset rows stays inside
/// the simulation driver and is never serialized into messages.
using Pseudonym = std::string;

enum class MessageKind {
  RecommendationRequest,
  TrustReport,
  ObfuscatedShare,
  KeyAnnounce,
  EncryptedAggregate,
  ReferralList,
  ReputationReport,
};

std::string to_string(MessageKind kind);

struct Message {
  std::uint64_t seq = 0;
  MessageKind kind;
  Pseudonym sender;
  Pseudonym receiver;
  nlohmann::json payload;
};

/// Ordered log of every message of a run. Each message is recorded
/// exactly once, in delivery order.
class Transcript {
 public:
  const Message& post(MessageKind kind, const Pseudonym& sender, const Pseudonym& receiver,
                      nlohmann::json payload);
  const std::vector<Message>& messages() const { return messages_; }

  /// JSON-lines form: seq, kind, sender, receiver, payload digest, and
  /// the full payload when include_payload is set (audit builds).
  std::string to_jsonl(bool include_payload) const;
  void write_jsonl(const std::filesystem::path& path, bool include_payload) const;

 private:
  std::vector<Message> messages_;
};

/// In-simulation stand-in for the reputation authority: additive scores,
/// +1 per reported success, -1 per reported failure.
class ReputationRegistry {
 public:
  void set_score(const Pseudonym& peer, double score) { scores_[peer] = score; }
  double score(const Pseudonym& peer) const {
    auto it = scores_.find(peer);
    return it == scores_.end() ? 0.0 : it->second;
  }
  void report_success(const Pseudonym& peer) { scores_[peer] += 1.0; }
  void report_failure(const Pseudonym& peer) { scores_[peer] -= 1.0; }
  const std::map<Pseudonym, double>& scores() const { return scores_; }

 private:
  std::map<Pseudonym, double> scores_;
};

struct Group {
  std::vector<Pseudonym> members;
  Pseudonym super_peer;
};

/// Seeded shuffle then contiguous chunks of at most group_size members;
/// each group elects the member with the highest reputation (ties to
/// pseudonym order).
std::vector<Group> form_groups(const std::vector<Pseudonym>& participants, Index group_size,
                               const ReputationRegistry& registry, Randomness& rng);

enum class AggregationRoute {
  corrected,      // outer layer stripped on ingress; inner-layer weighted sum
  paper_literal,  // layer-2 ciphertext product, kept for the discrepancy test
};

struct SimulationConfig {
  Index target_user = 0;
  std::vector<Index> participants;  // dataset rows, excluding the target
  Index group_size = 0;             // 0 -> one group holding everyone

  unsigned target_key_bits = 512;
  unsigned mediator_key_bits = 1026;  // >= 2 * target bits + 2
  std::int64_t weight_scale = 10000;        // W: trust weights quantized to 1/W
  std::int64_t fixed_point_scale = 1000000;  // S
  AggregationRoute route = AggregationRoute::corrected;

  double theta = 0.0;  // strict trust threshold
  int trust_z = 10;
  Index min_shared = 2;
  double acceptance_cutoff = 0.0;

  obf::ObfuscationPlan plan;  // per-user seeds are derived from plan.rng_seed
  int lsh_signature_length = 16;
  std::uint64_t lsh_seed = 7;
  std::uint64_t protocol_seed = 1;

  /// Items to request predictions for; defaults to every item the
  /// target has not rated.
  std::optional<std::vector<Index>> requested_items;
};

struct Referral {
  std::string item_signature;
  double predicted = 0.0;
  Index rank = 0;
};

/// Everything the privacy audit needs to know about a run: the
/// fixed-point encodings of every value that must never surface in a
/// PRS- or mediator-readable payload, and the secret-key components
/// that must never be serialized at all.
struct AuditContext {
  std::set<std::string> rating_encodings;  // decimal and hex forms
  std::set<std::string> secret_values;
  Pseudonym prs;
  Pseudonym mediator;
};

struct AuditReport {
  bool pass = true;
  std::vector<std::string> violations;
};

AuditReport audit_transcript(const Transcript& transcript, const AuditContext& context);

struct SimulationResult {
  std::vector<Referral> referrals;  // filtered and ranked
  Transcript transcript;

  std::map<std::string, double> prediction_by_signature;  // every decoded item
  std::map<std::string, Index> item_by_signature;
  std::map<Pseudonym, double> trust_by_pseudonym;  // responders only
  std::map<Pseudonym, Index> user_by_pseudonym;
  std::map<std::string, std::vector<Pseudonym>> contributors_by_signature;  // post-filter
  Vec item_means;  // clear means over the participant pool (NaN = no raters)

  Pseudonym target_pseudonym, mediator_pseudonym, prs_pseudonym, registry_pseudonym;
  std::vector<Pseudonym> superpeers;

  ReputationRegistry registry;
  AuditContext audit;
  std::vector<std::string> warnings;
  Index n_abstained = 0;
  bool decode_anomaly = false;  // any referral failed decryption or sanity bounds

  lsh::LshScheme scheme;
};

/// Runs the full three-phase protocol over an in-process message bus:
/// key preparation, trust-scored obfuscated shares with super-peer
/// aggregation and double encryption, then homomorphic prediction and
/// delivery. Deterministic under the config seeds. An empty catalog
/// falls back to generated item identifiers.
SimulationResult run_simulation(const RatingMatrix& data, const SimulationConfig& config,
                                const std::vector<ItemMeta>& catalog = {});

void write_referrals_csv(const std::vector<Referral>& referrals, const std::filesystem::path& path);

}  // namespace privrec::protocol
